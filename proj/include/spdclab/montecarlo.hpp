// Pulse-by-pulse stochastic simulation of the three photon-counting
// geometries: coincidence/CAR, Hong-Ou-Mandel, polarization Bell test, plus
// the Hanbury Brown-Twiss (intra-beam g2) arrangement.
//
// The pulse timeline is partitioned into fixed-size blocks; each block draws
// from a substream derived from (seed, block index) and blocks are merged in
// index order, so the output is bit-identical for any worker count. The
// per-pulse sampler walks directly over pulses that produce at least one
// detectable event: binomial thinning of a negative-binomial pair number is
// again negative binomial with the mean scaled by the per-pair detectability,
// so skipping silent pulses is exact, not an approximation.

#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "spdclab/physics.hpp"
#include "spdclab/rng.hpp"
#include "spdclab/tagstream.hpp"

namespace spdclab::mc {

// Source photons collide at detectors 1 and 2 directly.
struct GeometryCar {};

// Signal and idler meet at a 50:50 splitter with a relative input delay;
// detectors watch the two output ports.
struct GeometryHom {
    double delay_s = 0.0;
    double indistinguishability = 1.0;  // in [0,1]
    double sinc_width_s = 1.0;          // first-zero scale of the overlap envelope
    double gauss_width_s = 1.0;
    double center_s = 0.0;              // delay of maximal overlap
};

// Polarization analyzers at theta_a and theta_b in front of the detectors.
struct GeometryBell {
    double theta_a_rad = 0.0;
    double theta_b_rad = 0.0;
};

// Only the signal field, split 50:50 onto the two detectors.
struct GeometryHbt {};

using Geometry = std::variant<GeometryCar, GeometryHom, GeometryBell, GeometryHbt>;

struct DetectorParams {
    double jitter_sigma_ps = 100.0;
    double dead_time_ps = 0.0;          // 0 disables dead-time pruning
    std::int64_t resolution_ps = 1;     // timeline grid
};

struct ExperimentConfig {
    physics::PairSourceModel source;
    physics::ChannelParams channels;
    DetectorParams detectors;
    Geometry geometry;
    std::int64_t pulse_count = 0;
    std::uint64_t seed = 1;
};

void validate(const ExperimentConfig& config);

// Pulse period on the picosecond grid.
std::int64_t pulse_period_ps(const ExperimentConfig& config);
double timeline_duration_s(const ExperimentConfig& config);

// Simulate the configured run. The OpenMP version and the serial reference
// produce bit-identical streams; the serial one is kept for testing and as
// the benchmark baseline.
std::pair<TagStream, TagStream> simulate(const ExperimentConfig& config);
std::pair<TagStream, TagStream> simulate_serial(const ExperimentConfig& config);

// Draw one pulse's pair count: negative binomial with shape M and mean mu.
std::uint64_t sample_pairs(const physics::PairSourceModel& source, Rng& rng);

// Keep each of `count` photons with probability `transmission`.
std::uint64_t thin_loss(std::uint64_t count, double transmission, Rng& rng);

// Joint polarizer outcome for one pair; {pass_a, pass_b}.
std::pair<bool, bool> bell_outcome(double theta_a, double theta_b, double v_state,
                                   Rng& rng);

// Per-pair probability that the two photons leave the splitter by different
// ports (a cross-port coincidence candidate). 1/2 for fully distinguishable
// photons, 0 at the dip center for indistinguishability 1.
double hom_coincidence_prob(double delay_s, const GeometryHom& g);

// Apply the detector chain to a list of photon arrival times: Gaussian
// timing jitter, merged Poisson dark counts over [0, duration), then
// dead-time pruning. Channel transmission is already folded into arrival
// survival upstream, so every arrival produces a tag.
TagStream detector_response(const std::vector<std::uint64_t>& arrivals_ps,
                            int channel_id, double dark_rate_hz,
                            double duration_s, const DetectorParams& detectors,
                            Rng& jitter_rng, Rng& dark_rng);

}  // namespace spdclab::mc
