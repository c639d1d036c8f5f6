#include "thermo/pipeline.hpp"

#include "thermo/embedding.hpp"
#include "thermo/errors.hpp"
#include "thermo/rng.hpp"
#include "thermo/thermomics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace thermo {

namespace {

using nlohmann::json;

// ---- config parsing ----

void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigInvalid(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigInvalid("unknown key '" + it.key() + "' in " + where);
    }
}

FrameFormat frame_format_from_string(const std::string& s) {
    if (s == "csv") return FrameFormat::CsvFrames;
    if (s == "pgm16") return FrameFormat::Pgm16;
    if (s == "png16") return FrameFormat::Png16;
    throw ConfigInvalid("unknown frame format '" + s + "' (csv, pgm16, png16)");
}

std::string to_string(FrameFormat f) {
    switch (f) {
        case FrameFormat::CsvFrames: return "csv";
        case FrameFormat::Pgm16: return "pgm16";
        case FrameFormat::Png16: return "png16";
    }
    return "csv";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "insulated") return Boundary::Insulated;
    if (s == "fixed_ambient") return Boundary::FixedAmbient;
    throw ConfigInvalid("unknown boundary '" + s + "' (insulated, fixed_ambient)");
}

std::string to_string(Boundary b) {
    return b == Boundary::Insulated ? "insulated" : "fixed_ambient";
}

NmfSolver solver_from_string(const std::string& s) {
    if (s == "mu") return NmfSolver::MultiplicativeUpdate;
    if (s == "anls") return NmfSolver::Anls;
    throw ConfigInvalid("unknown NMF solver '" + s + "' (mu, anls)");
}

std::string to_string(NmfSolver s) {
    return s == NmfSolver::MultiplicativeUpdate ? "mu" : "anls";
}

LabelKernel label_kernel_from_string(const std::string& s) {
    if (s == "delta") return LabelKernel::Delta;
    if (s == "rbf") return LabelKernel::Rbf;
    throw ConfigInvalid("unknown label kernel '" + s + "' (delta, rbf)");
}

std::string to_string(LabelKernel k) { return k == LabelKernel::Delta ? "delta" : "rbf"; }

void parse_phantom(const json& j, PhantomCohortConfig& out) {
    require_keys(j, "phantom",
                 {"n_cases", "lesion_fraction", "rows", "cols", "dx", "dt", "steps", "tau",
                  "k_t", "rho_c", "omega_b_cb", "t_a", "q_m", "t_init", "noise_std",
                  "boundary"});
    if (j.contains("n_cases")) out.n_cases = j.at("n_cases").get<int>();
    if (j.contains("lesion_fraction")) out.lesion_fraction = j.at("lesion_fraction").get<double>();
    PhantomParams& p = out.params;
    if (j.contains("rows")) p.rows = j.at("rows").get<int>();
    if (j.contains("cols")) p.cols = j.at("cols").get<int>();
    if (j.contains("dx")) p.dx = j.at("dx").get<double>();
    if (j.contains("dt")) p.dt = j.at("dt").get<double>();
    if (j.contains("steps")) p.steps = j.at("steps").get<int>();
    if (j.contains("tau")) p.tau = j.at("tau").get<int>();
    if (j.contains("k_t")) p.k_t = j.at("k_t").get<double>();
    if (j.contains("rho_c")) p.rho_c = j.at("rho_c").get<double>();
    if (j.contains("omega_b_cb")) p.omega_b_cb = j.at("omega_b_cb").get<double>();
    if (j.contains("t_a")) p.t_a = j.at("t_a").get<double>();
    if (j.contains("q_m")) p.q_m = j.at("q_m").get<double>();
    if (j.contains("t_init")) p.t_init = j.at("t_init").get<double>();
    if (j.contains("noise_std")) p.noise_std = j.at("noise_std").get<double>();
    if (j.contains("boundary")) p.boundary = boundary_from_string(j.at("boundary").get<std::string>());
}

void parse_factorization(const json& j, FactorizationConfig& out) {
    require_keys(j, "factorization",
                 {"method", "k", "layer_sizes", "max_iters", "pretrain_iters",
                  "finetune_iters", "tol", "lambda", "solver"});
    if (j.contains("method")) out.method = factor_method_from_string(j.at("method").get<std::string>());
    if (j.contains("k")) out.k = j.at("k").get<int>();
    if (j.contains("layer_sizes")) out.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (j.contains("max_iters")) out.max_iters = j.at("max_iters").get<int>();
    if (j.contains("pretrain_iters")) out.pretrain_iters = j.at("pretrain_iters").get<int>();
    if (j.contains("finetune_iters")) out.finetune_iters = j.at("finetune_iters").get<int>();
    if (j.contains("tol")) out.tol = j.at("tol").get<double>();
    if (j.contains("lambda")) out.lambda = j.at("lambda").get<double>();
    if (j.contains("solver")) out.solver = solver_from_string(j.at("solver").get<std::string>());
}

void parse_selection(const json& j, SelectionConfig& out) {
    require_keys(j, "selection", {"delta", "lambda", "top_k", "label_kernel"});
    if (j.contains("delta")) out.delta = j.at("delta").get<int>();
    if (j.contains("lambda")) {
        const auto& l = j.at("lambda");
        if (l.is_string() && l.get<std::string>() == "auto")
            out.lambda.reset();
        else
            out.lambda = l.get<double>();
    }
    if (j.contains("top_k")) out.top_k = j.at("top_k").get<int>();
    if (j.contains("label_kernel"))
        out.label_kernel = label_kernel_from_string(j.at("label_kernel").get<std::string>());
}

void parse_analysis(const json& j, AnalysisConfig& out) {
    require_keys(j, "analysis",
                 {"n_trees", "max_depth", "min_leaf", "noise_levels", "sweep_methods",
                  "sweep_k", "sweep_layer_sizes", "sweep_max_iters"});
    if (j.contains("n_trees")) out.n_trees = j.at("n_trees").get<int>();
    if (j.contains("max_depth")) out.max_depth = j.at("max_depth").get<int>();
    if (j.contains("min_leaf")) out.min_leaf = j.at("min_leaf").get<int>();
    if (j.contains("noise_levels")) out.noise_levels = j.at("noise_levels").get<std::vector<double>>();
    if (j.contains("sweep_methods")) {
        out.sweep_methods.clear();
        for (const auto& m : j.at("sweep_methods"))
            out.sweep_methods.push_back(factor_method_from_string(m.get<std::string>()));
    }
    if (j.contains("sweep_k")) out.sweep_k = j.at("sweep_k").get<int>();
    if (j.contains("sweep_layer_sizes"))
        out.sweep_layer_sizes = j.at("sweep_layer_sizes").get<std::vector<int>>();
    if (j.contains("sweep_max_iters")) out.sweep_max_iters = j.at("sweep_max_iters").get<int>();
}

PipelineConfig parse_config_json(const json& j) {
    require_keys(j, "config",
                 {"output_dir", "seed", "jobs", "input", "phantom", "factorization",
                  "embedding", "thermomics", "selection", "analysis"});
    PipelineConfig cfg;
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (j.contains("input")) {
        const json& in = j.at("input");
        require_keys(in, "input", {"cohort_dir", "format"});
        cfg.cohort_dir = in.at("cohort_dir").get<std::string>();
        if (in.contains("format"))
            cfg.input_format = frame_format_from_string(in.at("format").get<std::string>());
    }
    if (j.contains("phantom")) {
        cfg.phantom.emplace();
        parse_phantom(j.at("phantom"), *cfg.phantom);
    }
    if (cfg.cohort_dir && cfg.phantom)
        throw ConfigInvalid("give either 'input' or 'phantom', not both");
    if (!cfg.cohort_dir && !cfg.phantom)
        throw ConfigInvalid("config needs an 'input' block or a 'phantom' block");
    if (j.contains("factorization")) parse_factorization(j.at("factorization"), cfg.factorization);
    if (j.contains("embedding")) {
        const json& e = j.at("embedding");
        require_keys(e, "embedding", {"normalize"});
        if (e.contains("normalize")) cfg.normalize_avatars = e.at("normalize").get<bool>();
    }
    if (j.contains("thermomics")) {
        const json& t = j.at("thermomics");
        require_keys(t, "thermomics", {"manifest"});
        if (t.contains("manifest")) cfg.manifest_version = t.at("manifest").get<std::string>();
    }
    if (cfg.manifest_version != "thermomics-v1")
        throw ConfigInvalid("unsupported thermomics manifest '" + cfg.manifest_version + "'");
    if (j.contains("selection")) parse_selection(j.at("selection"), cfg.selection);
    if (j.contains("analysis")) parse_analysis(j.at("analysis"), cfg.analysis);
    if (cfg.jobs < 1) throw ConfigInvalid("jobs must be >= 1");
    if (cfg.selection.top_k < 1) throw ConfigInvalid("selection.top_k must be >= 1");
    if (cfg.selection.delta < 2) throw ConfigInvalid("selection.delta must be >= 2");
    if (cfg.selection.lambda && *cfg.selection.lambda < 0)
        throw ConfigInvalid("selection.lambda must be >= 0");
    if (cfg.factorization.lambda < 0) throw ConfigInvalid("factorization.lambda must be >= 0");
    if (cfg.factorization.k < 1) throw ConfigInvalid("factorization.k must be >= 1");
    if (cfg.analysis.n_trees < 1) throw ConfigInvalid("analysis.n_trees must be >= 1");
    return cfg;
}

// Canonical form for hashing. output_dir and jobs are deliberately left out:
// they cannot change artifact content, so they must not make it look stale.
json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    if (cfg.cohort_dir) {
        j["input"]["cohort_dir"] = cfg.cohort_dir->string();
        j["input"]["format"] = to_string(cfg.input_format);
    }
    if (cfg.phantom) {
        json p;
        p["n_cases"] = cfg.phantom->n_cases;
        p["lesion_fraction"] = cfg.phantom->lesion_fraction;
        const PhantomParams& pp = cfg.phantom->params;
        p["rows"] = pp.rows;
        p["cols"] = pp.cols;
        p["dx"] = pp.dx;
        p["dt"] = pp.dt;
        p["steps"] = pp.steps;
        p["tau"] = pp.tau;
        p["k_t"] = pp.k_t;
        p["rho_c"] = pp.rho_c;
        p["omega_b_cb"] = pp.omega_b_cb;
        p["t_a"] = pp.t_a;
        p["q_m"] = pp.q_m;
        p["t_init"] = pp.t_init;
        p["noise_std"] = pp.noise_std;
        p["boundary"] = to_string(pp.boundary);
        j["phantom"] = std::move(p);
    }
    json f;
    f["method"] = to_string(cfg.factorization.method);
    f["k"] = cfg.factorization.k;
    f["layer_sizes"] = cfg.factorization.layer_sizes;
    f["max_iters"] = cfg.factorization.max_iters;
    f["pretrain_iters"] = cfg.factorization.pretrain_iters;
    f["finetune_iters"] = cfg.factorization.finetune_iters;
    f["tol"] = cfg.factorization.tol;
    f["lambda"] = cfg.factorization.lambda;
    f["solver"] = to_string(cfg.factorization.solver);
    j["factorization"] = std::move(f);
    j["embedding"]["normalize"] = cfg.normalize_avatars;
    j["thermomics"]["manifest"] = cfg.manifest_version;
    json s;
    s["delta"] = cfg.selection.delta;
    if (cfg.selection.lambda)
        s["lambda"] = *cfg.selection.lambda;
    else
        s["lambda"] = "auto";
    s["top_k"] = cfg.selection.top_k;
    s["label_kernel"] = to_string(cfg.selection.label_kernel);
    j["selection"] = std::move(s);
    json a;
    a["n_trees"] = cfg.analysis.n_trees;
    a["max_depth"] = cfg.analysis.max_depth;
    a["min_leaf"] = cfg.analysis.min_leaf;
    a["noise_levels"] = cfg.analysis.noise_levels;
    std::vector<std::string> methods;
    for (FactorMethod m : cfg.analysis.sweep_methods) methods.push_back(to_string(m));
    a["sweep_methods"] = methods;
    a["sweep_k"] = cfg.analysis.sweep_k;
    a["sweep_layer_sizes"] = cfg.analysis.sweep_layer_sizes;
    a["sweep_max_iters"] = cfg.analysis.sweep_max_iters;
    j["analysis"] = std::move(a);
    return j;
}

// ---- stage plumbing ----

std::vector<std::string> standard_comments(const PipelineConfig& cfg) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "config fnv1a:%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    std::vector<std::string> out{buf};
    std::snprintf(buf, sizeof buf, "seed %llu", static_cast<unsigned long long>(cfg.seed));
    out.emplace_back(buf);
    out.emplace_back("pipeline-version 1");
    return out;
}

std::filesystem::path cohort_root(const PipelineConfig& cfg) {
    return cfg.cohort_dir ? *cfg.cohort_dir : cfg.output_dir / "cohort";
}

// Frame format of the cohort the downstream stages read. Phantom cohorts are
// always written as CSV so temperatures round-trip verbatim.
FrameFormat cohort_format(const PipelineConfig& cfg) {
    return cfg.cohort_dir ? cfg.input_format : FrameFormat::CsvFrames;
}

struct CohortIndex {
    std::vector<std::string> case_ids;
    std::vector<int> labels;
};

CohortIndex read_cohort_index(const std::filesystem::path& root) {
    std::ifstream in(root / "manifest.csv");
    if (!in)
        throw MissingUpstreamArtifact("no cohort manifest at " +
                                      (root / "manifest.csv").string() +
                                      "; run the phantom stage or point input.cohort_dir at a cohort");
    CohortIndex idx;
    std::string line;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_done) {
            header_done = true;
            continue;
        }
        std::stringstream ss(line);
        std::string case_id, label;
        if (!std::getline(ss, case_id, ',') || !std::getline(ss, label, ','))
            throw UnreadableFile("bad cohort manifest row: " + line);
        idx.case_ids.push_back(case_id);
        try {
            idx.labels.push_back(std::stoi(label));
        } catch (const std::exception&) {
            throw UnreadableFile("bad label in cohort manifest row: " + line);
        }
    }
    if (idx.case_ids.empty()) throw MissingUpstreamArtifact("cohort manifest lists no cases");
    return idx;
}

RoiMask read_cohort_roi(const std::filesystem::path& root) {
    const auto mask_path = root / "roi_mask.png";
    if (!std::filesystem::exists(mask_path))
        throw MissingUpstreamArtifact("no ROI mask at " + mask_path.string());
    RoiMask roi;
    roi.mask = read_mask(mask_path);
    const auto ref_path = root / "reference_mask.png";
    if (std::filesystem::exists(ref_path)) roi.reference_mask = read_mask(ref_path);
    roi.validate();
    return roi;
}

void parallel_for(int jobs, int n, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr err;
    std::mutex err_mu;
    const int workers = std::min(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (!failed.load()) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!err) err = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

void require_dir(const std::filesystem::path& dir, const std::string& hint) {
    if (!std::filesystem::exists(dir))
        throw MissingUpstreamArtifact("missing " + dir.string() + "; " + hint);
}

} // namespace

PipelineConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        // allow // and /* */ comments so configs can be annotated
        j = json::parse(json_text, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return parse_config_json(j);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("bad config value: ") + e.what());
    }
}

PipelineConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigInvalid("cannot read config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string canonical_config_text(const PipelineConfig& cfg) {
    return config_to_json(cfg).dump(); // object keys serialize sorted
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
    return fnv1a(canonical_config_text(cfg));
}

void cmd_phantom(const PipelineConfig& cfg) {
    if (!cfg.phantom)
        throw ConfigInvalid("config has no 'phantom' block; nothing to generate");
    PhantomParams params = cfg.phantom->params;
    Cohort cohort = make_cohort(cfg.phantom->n_cases, cfg.phantom->lesion_fraction, params,
                                derive_seed(cfg.seed, "phantom"));
    save_cohort(cfg.output_dir / "cohort", cohort, FrameFormat::CsvFrames,
                standard_comments(cfg));
}

void cmd_factorize(const PipelineConfig& cfg) {
    const auto root = cohort_root(cfg);
    const CohortIndex idx = read_cohort_index(root);
    const FrameFormat fmt = cohort_format(cfg);
    const auto comments = standard_comments(cfg);
    const FactorizationConfig& fc = cfg.factorization;
    parallel_for(cfg.jobs, static_cast<int>(idx.case_ids.size()), [&](int i) {
        const std::string& case_id = idx.case_ids[static_cast<std::size_t>(i)];
        const HeatMatrix x = stack_vectorize(load_sequence(root / case_id, fmt));
        const std::uint64_t case_seed = derive_seed(cfg.seed, "factorize/" + case_id);
        const auto out_dir = cfg.output_dir / "factorization" / case_id;
        IterOptions opt;
        opt.max_iters = fc.max_iters;
        opt.tol = fc.tol;
        opt.seed = case_seed;
        opt.solver = fc.solver;
        switch (fc.method) {
            case FactorMethod::Pct:
                save_factorization(out_dir, pct(x, fc.k), case_seed, comments);
                break;
            case FactorMethod::Nmf:
                save_factorization(out_dir, nmf(x, fc.k, opt), case_seed, comments);
                break;
            case FactorMethod::SparseNmf:
                save_factorization(out_dir, sparse_nmf(x, fc.k, fc.lambda, opt), case_seed,
                                   comments);
                break;
            case FactorMethod::SemiNmf:
                save_factorization(out_dir, semi_nmf(x, fc.k, opt), case_seed, comments);
                break;
            case FactorMethod::DeepSemiNmf: {
                DeepOptions dopt;
                dopt.pretrain_iters = fc.pretrain_iters;
                dopt.finetune_iters = fc.finetune_iters;
                dopt.tol = fc.tol;
                dopt.seed = case_seed;
                save_factorization(out_dir, deep_semi_nmf(x, fc.layer_sizes, dopt), case_seed,
                                   comments);
                break;
            }
        }
    });
}

void cmd_embed(const PipelineConfig& cfg) {
    const auto fact_dir = cfg.output_dir / "factorization";
    require_dir(fact_dir, "run the factorize stage first");
    const auto root = cohort_root(cfg);
    const CohortIndex idx = read_cohort_index(root);
    const RoiMask roi = read_cohort_roi(root);
    const int rows = static_cast<int>(roi.mask.rows());
    const int cols = static_cast<int>(roi.mask.cols());
    const auto comments = standard_comments(cfg);
    parallel_for(cfg.jobs, static_cast<int>(idx.case_ids.size()), [&](int i) {
        const std::string& case_id = idx.case_ids[static_cast<std::size_t>(i)];
        const LoadedFactorization lf = load_factorization(fact_dir / case_id);
        const Matrix bases = lf.deep ? effective_bases(*lf.deep) : lf.shallow->bases;
        Avatar a = embed(bases, rows, cols, lf.method);
        if (cfg.normalize_avatars) a = normalize_by_reference(a, roi);
        save_avatar(cfg.output_dir / "avatars" / case_id, a, comments);
    });
}

void cmd_features(const PipelineConfig& cfg) {
    const auto avatar_dir = cfg.output_dir / "avatars";
    require_dir(avatar_dir, "run the embed stage first");
    const auto root = cohort_root(cfg);
    const CohortIndex idx = read_cohort_index(root);
    const RoiMask roi = read_cohort_roi(root);
    const int n = static_cast<int>(idx.case_ids.size());

    FeatureMatrix fm;
    fm.names = feature_manifest();
    fm.values.resize(n, kFeatureCount);
    fm.case_ids = idx.case_ids;
    fm.labels = idx.labels;
    parallel_for(cfg.jobs, n, [&](int i) {
        const Avatar a = load_avatar(avatar_dir / idx.case_ids[static_cast<std::size_t>(i)]);
        const FeatureVector fv = extract_thermomics(a, roi);
        fm.values.row(i) = fv.values.transpose();
    });
    std::filesystem::create_directories(cfg.output_dir / "features");
    save_feature_matrix(cfg.output_dir / "features" / "features.csv", fm,
                        standard_comments(cfg));
}

void cmd_select(const PipelineConfig& cfg) {
    const auto features_file = cfg.output_dir / "features" / "features.csv";
    if (!std::filesystem::exists(features_file))
        throw MissingUpstreamArtifact("missing " + features_file.string() +
                                      "; run the features stage first");
    const FeatureMatrix fm = load_feature_matrix(features_file);
    const std::uint64_t seed = derive_seed(cfg.seed, "select");
    const SelectionConfig& sc = cfg.selection;
    const SelectionResult r =
        sc.lambda ? block_hsic_lasso(fm, sc.delta, *sc.lambda, sc.label_kernel, seed)
                  : block_hsic_lasso_auto(fm, sc.delta, sc.top_k, sc.label_kernel, seed);
    std::filesystem::create_directories(cfg.output_dir / "selection");
    save_selection(cfg.output_dir / "selection" / "selection.csv", r, standard_comments(cfg));
}

void cmd_classify(const PipelineConfig& cfg) {
    const auto features_file = cfg.output_dir / "features" / "features.csv";
    if (!std::filesystem::exists(features_file))
        throw MissingUpstreamArtifact("missing " + features_file.string() +
                                      "; run the features stage first");
    const auto selection_file = cfg.output_dir / "selection" / "selection.csv";
    if (!std::filesystem::exists(selection_file))
        throw MissingUpstreamArtifact("missing " + selection_file.string() +
                                      "; run the select stage first");
    const FeatureMatrix fm = load_feature_matrix(features_file);
    const SelectionResult sel = load_selection(selection_file, fm.names);
    const auto top = select_top_k(sel, cfg.selection.top_k);
    if (top.empty())
        throw AllFeaturesDegenerate("selection kept no features; nothing to classify");
    std::vector<std::string> names;
    for (const auto& e : top) names.push_back(e.name);
    ForestParams params;
    params.n_trees = cfg.analysis.n_trees;
    params.max_depth = cfg.analysis.max_depth;
    params.min_leaf = cfg.analysis.min_leaf;
    params.seed = derive_seed(cfg.seed, "classify");
    const EvalReport report = loocv(restrict_features(fm, names), params);
    save_eval_report(cfg.output_dir / "classify", report, standard_comments(cfg));
}

void cmd_sweep(const PipelineConfig& cfg) {
    const auto root = cohort_root(cfg);
    const CohortIndex idx = read_cohort_index(root);
    const RoiMask roi = read_cohort_roi(root);
    // deterministic representative: first labeled case, else the first case
    std::size_t pick = 0;
    for (std::size_t i = 0; i < idx.labels.size(); ++i)
        if (idx.labels[i] == 1) {
            pick = i;
            break;
        }
    const ThermalSequence seq = load_sequence(root / idx.case_ids[pick], cohort_format(cfg));
    SweepOptions opt;
    opt.k = cfg.analysis.sweep_k;
    opt.layer_sizes = cfg.analysis.sweep_layer_sizes;
    opt.max_iters = cfg.analysis.sweep_max_iters;
    opt.seed = derive_seed(cfg.seed, "sweep");
    const NoiseSweepReport report = noise_robustness_sweep(seq, roi, cfg.analysis.sweep_methods,
                                                           cfg.analysis.noise_levels, opt);
    std::filesystem::create_directories(cfg.output_dir / "sweep");
    auto comments = standard_comments(cfg);
    comments.push_back("sweep-case " + idx.case_ids[pick]);
    save_noise_sweep(cfg.output_dir / "sweep" / "noise_sweep.csv", report, comments);
}

void cmd_pipeline(const PipelineConfig& cfg) {
    if (cfg.phantom) cmd_phantom(cfg);
    cmd_factorize(cfg);
    cmd_embed(cfg);
    cmd_features(cfg);
    cmd_select(cfg);
    cmd_classify(cfg);
    cmd_sweep(cfg);
}

} // namespace thermo
