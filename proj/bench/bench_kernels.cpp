// Benchmark of the OpenMP kernels against their serial references:
// block-parallel pulse simulation and partitioned coincidence histogramming.
// Build target only; not part of the test suite.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "spdclab/montecarlo.hpp"
#include "spdclab/timetags.hpp"

using namespace spdclab;

namespace {

double time_s(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

mc::ExperimentConfig bright_config() {
    // Bright source and lossy-but-generous channels keep every block busy, so
    // the per-pulse sampler dominates instead of the merge.
    mc::ExperimentConfig c;
    c.source.mean_pairs_per_pulse = 5.0;
    c.source.mode_count = 1.8;
    c.channels.transmission1 = 0.1;
    c.channels.transmission2 = 0.1;
    c.channels.dark_rate_hz1 = 1000.0;
    c.channels.dark_rate_hz2 = 1000.0;
    c.channels.rep_rate_hz = 80.0e6;
    c.channels.coincidence_window_ps = 2560;
    c.detectors.jitter_sigma_ps = 100.0;
    c.geometry = mc::GeometryCar{};
    c.pulse_count = 8000000;
    c.seed = 7;
    return c;
}

}  // namespace

int main() {
    const int threads = omp_get_max_threads();
    std::printf("spdclab kernel benchmark (max threads: %d)\n\n", threads);

    {
        const auto cfg = bright_config();
        std::pair<TagStream, TagStream> out;
        const double serial = time_s([&] { out = mc::simulate_serial(cfg); });
        const std::size_t tags = out.first.size() + out.second.size();
        omp_set_num_threads(threads);
        const double parallel = time_s([&] { out = mc::simulate(cfg); });
        std::printf("simulate: %lld pulses -> %zu tags\n",
                    static_cast<long long>(cfg.pulse_count), tags);
        std::printf("  serial   %8.3f s  (%6.1f ns/pulse)\n", serial,
                    serial / static_cast<double>(cfg.pulse_count) * 1.0e9);
        std::printf("  openmp   %8.3f s  (%6.1f ns/pulse)  speedup %.2fx\n\n", parallel,
                    parallel / static_cast<double>(cfg.pulse_count) * 1.0e9,
                    serial / parallel);
    }

    {
        // Dense streams to stress the histogram sweep.
        mc::ExperimentConfig cfg = bright_config();
        cfg.source.mean_pairs_per_pulse = 2.0;
        cfg.channels.transmission1 = 0.5;
        cfg.channels.transmission2 = 0.5;
        cfg.pulse_count = 4000000;
        const auto [s1, s2] = mc::simulate(cfg);
        tt::CoincidenceHistogram h;
        const double serial = time_s(
            [&] { h = tt::coincidence_histogram_serial(s1, s2, 256, 256 * 1024); });
        const double parallel =
            time_s([&] { h = tt::coincidence_histogram(s1, s2, 256, 256 * 1024); });
        std::printf("histogram: %zu x %zu tags, %zu bins, %llu pairs counted\n",
                    s1.size(), s2.size(), h.counts.size(),
                    static_cast<unsigned long long>(h.total()));
        std::printf("  serial   %8.3f s\n", serial);
        std::printf("  openmp   %8.3f s  speedup %.2fx\n", parallel, serial / parallel);
    }
    return 0;
}
