#include "thermo/phantom.hpp"

#include "thermo/errors.hpp"
#include "thermo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace thermo {

namespace {

void check_params(const PhantomParams& p) {
    if (p.rows < 2 || p.cols < 2) throw ConfigInvalid("phantom grid must be at least 2x2");
    if (p.dx <= 0 || p.dt <= 0 || p.rho_c <= 0)
        throw ConfigInvalid("dx, dt and rho_c must be positive");
    if (p.k_t < 0 || p.omega_b_cb < 0 || p.q_m < 0 || p.noise_std < 0)
        throw ConfigInvalid("k_t, omega_b_cb, q_m and noise_std must be nonnegative");
    if (p.tau < 2) throw ConfigInvalid("need at least 2 emitted frames");
    if (p.steps < p.tau) throw ConfigInvalid("steps must be >= tau");
    if (p.k_t > 0 && p.dt > p.dx * p.dx * p.rho_c / (4 * p.k_t))
        throw UnstableTimestep("dt " + std::to_string(p.dt) + " exceeds the explicit bound " +
                               std::to_string(p.dx * p.dx * p.rho_c / (4 * p.k_t)));
    for (const auto& l : p.lesions) {
        if (l.radius <= 0) throw LesionOutOfBounds("lesion radius must be positive");
        if (l.center_row - l.radius < 0 || l.center_row + l.radius > p.rows - 1 ||
            l.center_col - l.radius < 0 || l.center_col + l.radius > p.cols - 1)
            throw LesionOutOfBounds("lesion circle leaves the grid");
    }
    if (p.t_init_field &&
        (p.t_init_field->rows() != p.rows || p.t_init_field->cols() != p.cols))
        throw ConfigInvalid("t_init_field dimensions do not match the grid");
}

} // namespace

ThermalSequence simulate(const PhantomParams& p) {
    check_params(p);

    Matrix t = p.t_init_field ? *p.t_init_field
                              : Matrix::Constant(p.rows, p.cols, p.t_init);
    Matrix q = Matrix::Constant(p.rows, p.cols, p.q_m);
    for (const auto& l : p.lesions)
        for (int r = 0; r < p.rows; ++r)
            for (int c = 0; c < p.cols; ++c) {
                const double dr = r - l.center_row, dc = c - l.center_col;
                if (dr * dr + dc * dc <= l.radius * l.radius) q(r, c) += l.extra_q;
            }

    // Emitted frame j is the state after floor((j+1)*steps/tau) steps.
    std::vector<int> emit_at(static_cast<std::size_t>(p.tau));
    for (int j = 0; j < p.tau; ++j)
        emit_at[static_cast<std::size_t>(j)] =
            static_cast<int>(static_cast<long>(j + 1) * p.steps / p.tau);

    Rng sensor(derive_seed(p.seed, "sensor"));
    ThermalSequence seq;
    seq.frames.reserve(static_cast<std::size_t>(p.tau));

    const double inv_dx2 = 1.0 / (p.dx * p.dx);
    const double a = p.dt / p.rho_c;
    Matrix next(p.rows, p.cols);
    std::size_t emit_idx = 0;
    auto ghost = [&](const Matrix& m, int r, int c) {
        if (r >= 0 && r < p.rows && c >= 0 && c < p.cols) return m(r, c);
        if (p.boundary == Boundary::FixedAmbient) return p.t_a;
        return m(std::clamp(r, 0, p.rows - 1), std::clamp(c, 0, p.cols - 1)); // mirror
    };
    for (int step = 1; step <= p.steps; ++step) {
        for (int r = 0; r < p.rows; ++r)
            for (int c = 0; c < p.cols; ++c) {
                const double center = t(r, c);
                const double lap = (ghost(t, r - 1, c) + ghost(t, r + 1, c) +
                                    ghost(t, r, c - 1) + ghost(t, r, c + 1) - 4 * center) *
                                   inv_dx2;
                next(r, c) = center + a * (p.k_t * lap + p.omega_b_cb * (p.t_a - center) +
                                           q(r, c));
            }
        t.swap(next);
        // steps >= tau makes the emit points strictly increasing, ending at steps
        if (emit_idx < emit_at.size() && step == emit_at[emit_idx]) {
            Matrix frame = t;
            if (p.noise_std > 0)
                for (int r = 0; r < p.rows; ++r)
                    for (int c = 0; c < p.cols; ++c)
                        frame(r, c) += p.noise_std * sensor.normal();
            seq.frames.push_back(std::move(frame));
            ++emit_idx;
        }
    }
    seq.validate();
    return seq;
}

Cohort make_cohort(int n_cases, double lesion_fraction, const PhantomParams& params_template,
                   std::uint64_t seed) {
    if (n_cases < 2) throw TooFewCases("cohort needs at least 2 cases");
    if (lesion_fraction < 0 || lesion_fraction > 1)
        throw ConfigInvalid("lesion_fraction must lie in [0, 1]");
    check_params(params_template);

    const int rows = params_template.rows, cols = params_template.cols;
    const double min_dim = static_cast<double>(std::min(rows, cols));

    Cohort cohort;
    cohort.roi.mask = BoolMask::Constant(rows, cols, false);
    const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;
    const double roi_radius = 0.4 * min_dim;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= roi_radius * roi_radius)
                cohort.roi.mask(r, c) = true;
    BoolMask ref = BoolMask::Constant(rows, cols, false);
    for (int r = 0; r < std::min(3, rows); ++r)
        for (int c = 0; c < cols; ++c)
            if (!cohort.roi.mask(r, c)) ref(r, c) = true;
    cohort.roi.reference_mask = ref;
    cohort.roi.validate();

    const int n_lesion = static_cast<int>(std::lround(n_cases * lesion_fraction));
    for (int i = 0; i < n_cases; ++i) {
        Rng rng(derive_seed(seed, "case" + std::to_string(i)));
        PhantomParams p = params_template;
        p.q_m = params_template.q_m * rng.uniform(0.9, 1.1);
        p.t_init = params_template.t_init + rng.uniform(-0.3, 0.3);
        p.seed = derive_seed(seed, "case" + std::to_string(i) + "/sim");
        const bool lesion_case = i < n_lesion;
        if (lesion_case) {
            const int count = rng.uniform01() < 0.5 ? 1 : 2;
            for (int l = 0; l < count; ++l) {
                Lesion les;
                const double ang = rng.uniform(0, 2 * std::numbers::pi);
                const double rad = 0.25 * min_dim * std::sqrt(rng.uniform01());
                les.center_row = cy + rad * std::sin(ang);
                les.center_col = cx + rad * std::cos(ang);
                // Clamp so the circle always stays on the grid. On the default
                // 64x64 geometry the margin exceeds the draw range and the
                // clamp never fires.
                const double margin =
                    std::min(std::min(les.center_row, rows - 1 - les.center_row),
                             std::min(les.center_col, cols - 1 - les.center_col));
                les.radius = std::min(rng.uniform(2.5, 6.0), margin);
                les.extra_q = rng.uniform(5000.0, 15000.0);
                p.lesions.push_back(les);
            }
        }
        ThermalSequence seq = simulate(p);
        char id[16];
        std::snprintf(id, sizeof id, "case%03d", i);
        seq.case_id = id;
        seq.label = lesion_case ? 1 : 0;
        cohort.cases.push_back(std::move(seq));
        cohort.lesions.push_back(p.lesions);
    }
    return cohort;
}

namespace {

std::string frame_extension(FrameFormat format) {
    switch (format) {
        case FrameFormat::CsvFrames: return ".csv";
        case FrameFormat::Pgm16: return ".pgm";
        case FrameFormat::Png16: return ".png";
    }
    return ".csv";
}

} // namespace

void save_cohort(const std::filesystem::path& dir, const Cohort& cohort, FrameFormat format,
                 const std::vector<std::string>& comments) {
    std::filesystem::create_directories(dir);
    for (const auto& seq : cohort.cases) {
        const auto case_dir = dir / seq.case_id;
        std::filesystem::create_directories(case_dir);
        for (std::size_t f = 0; f < seq.frames.size(); ++f) {
            char name[32];
            std::snprintf(name, sizeof name, "frame%03zu%s", f, frame_extension(format).c_str());
            const auto path = case_dir / name;
            switch (format) {
                case FrameFormat::CsvFrames: write_csv_matrix(path, seq.frames[f]); break;
                case FrameFormat::Pgm16: write_pgm16(path, seq.frames[f]); break;
                case FrameFormat::Png16: write_png16(path, seq.frames[f]); break;
            }
        }
    }
    write_mask(dir / "roi_mask.png", cohort.roi.mask);
    if (cohort.roi.reference_mask)
        write_mask(dir / "reference_mask.png", *cohort.roi.reference_mask);

    std::ofstream out(dir / "manifest.csv");
    if (!out) throw UnreadableFile("cannot write " + (dir / "manifest.csv").string());
    for (const auto& c : comments) out << "# " << c << "\n";
    out << "case_id,label,lesions\n";
    char buf[128];
    for (std::size_t i = 0; i < cohort.cases.size(); ++i) {
        out << cohort.cases[i].case_id << "," << cohort.cases[i].label.value_or(0) << ",";
        const auto& lesions = i < cohort.lesions.size() ? cohort.lesions[i] : std::vector<Lesion>{};
        for (std::size_t l = 0; l < lesions.size(); ++l) {
            std::snprintf(buf, sizeof buf, "%.17g;%.17g;%.17g;%.17g", lesions[l].center_row,
                          lesions[l].center_col, lesions[l].radius, lesions[l].extra_q);
            out << (l > 0 ? "|" : "") << buf;
        }
        out << "\n";
    }
}

LoadedCohort load_cohort(const std::filesystem::path& dir, FrameFormat format) {
    std::ifstream in(dir / "manifest.csv");
    if (!in) throw MissingUpstreamArtifact("no cohort manifest in " + dir.string());
    LoadedCohort out;
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
        ThermalSequence seq = load_sequence(dir / case_id, format);
        seq.case_id = case_id;
        try {
            seq.label = std::stoi(label);
        } catch (const std::exception&) {
            throw UnreadableFile("bad label in cohort manifest row: " + line);
        }
        out.cases.push_back(std::move(seq));
    }
    if (out.cases.empty()) throw MissingUpstreamArtifact("cohort manifest lists no cases");
    out.roi.mask = read_mask(dir / "roi_mask.png");
    const auto ref_path = dir / "reference_mask.png";
    if (std::filesystem::exists(ref_path)) out.roi.reference_mask = read_mask(ref_path);
    out.roi.validate();
    return out;
}

} // namespace thermo
