#pragma once

#include "thermo/thermal_data.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace thermo {

struct Lesion {
    double center_row = 0; // pixels
    double center_col = 0;
    double radius = 0;  // pixels
    double extra_q = 0; // additional W/m^3
};

enum class Boundary { Insulated, FixedAmbient };

// Explicit finite-difference Pennes model:
//   T <- T + (dt/rho_c) * (k_t lap(T) + omega_b_cb (T_a - T) + q_m + lesion q)
// k_t, omega_b_cb and q_m may be zero to exercise limit cases; dx, dt, rho_c
// must stay positive.
struct PhantomParams {
    int rows = 64;
    int cols = 64;
    double dx = 0.002; // meters
    double dt = 1.0;   // seconds
    int steps = 600;   // finite-difference steps
    int tau = 23;      // emitted frames, subsampled uniformly, last at the end
    double k_t = 0.5;         // W/(m K)
    double rho_c = 3.8e6;     // J/(m^3 K)
    double omega_b_cb = 2400; // W/(m^3 K)
    double t_a = 37.0;        // arterial temperature, C
    double q_m = 450.0;       // basal metabolic heat, W/m^3
    double t_init = 34.0;     // uniform initial skin temperature, C
    double noise_std = 0.04;  // sensor noise on emitted frames; 0 = off
    std::vector<Lesion> lesions;
    Boundary boundary = Boundary::Insulated;
    std::uint64_t seed = 0;
    std::optional<Matrix> t_init_field; // overrides the uniform initial state
};

ThermalSequence simulate(const PhantomParams& params);

struct Cohort {
    std::vector<ThermalSequence> cases; // case_id and label filled in
    RoiMask roi;                        // shared geometry: central disk + top reference strip
    std::vector<std::vector<Lesion>> lesions; // per case
};

// Lesion cases carry 1-2 jittered lesions; every case gets basal-parameter
// jitter. The first round(n * fraction) cases are labeled 1.
Cohort make_cohort(int n_cases, double lesion_fraction, const PhantomParams& params_template,
                   std::uint64_t seed);

// One frame directory per case plus shared masks and a manifest CSV.
void save_cohort(const std::filesystem::path& dir, const Cohort& cohort,
                 FrameFormat format = FrameFormat::CsvFrames,
                 const std::vector<std::string>& comments = {});

struct LoadedCohort {
    std::vector<ThermalSequence> cases;
    RoiMask roi;
};
LoadedCohort load_cohort(const std::filesystem::path& dir,
                         FrameFormat format = FrameFormat::CsvFrames);

} // namespace thermo
