#include "spdclab/montecarlo.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spdclab::mc {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

constexpr std::int64_t kBlockPulses = 1 << 20;

// One way a pulse can become visible: `prob` is the per-pair probability and
// ch1/ch2 the tags it deposits at the pulse time.
struct EventCategory {
    double prob = 0.0;
    std::uint8_t ch1 = 0;
    std::uint8_t ch2 = 0;
};

struct CategoryTable {
    // Cumulative probabilities normalized to the total visible probability.
    std::vector<EventCategory> categories;
    std::vector<double> cumulative;
    double visible_prob = 0.0;  // per-pair probability of leaving any tag

    void add(double prob, std::uint8_t ch1, std::uint8_t ch2) {
        if (prob <= 0.0) return;
        categories.push_back({prob, ch1, ch2});
        visible_prob += prob;
    }

    void finalize() {
        cumulative.resize(categories.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < categories.size(); ++i) {
            acc += categories[i].prob / visible_prob;
            cumulative[i] = acc;
        }
        if (!cumulative.empty()) cumulative.back() = 1.0;
    }

    const EventCategory& draw(Rng& rng) const {
        const double u = rng.uniform();
        std::size_t i = 0;
        while (i + 1 < cumulative.size() && u >= cumulative[i]) ++i;
        return categories[i];
    }
};

CategoryTable build_categories(const ExperimentConfig& config) {
    const double eta1 = config.channels.transmission1;
    const double eta2 = config.channels.transmission2;
    CategoryTable table;

    if (std::holds_alternative<GeometryCar>(config.geometry)) {
        table.add(eta1 * eta2, 1, 1);
        table.add(eta1 * (1.0 - eta2), 1, 0);
        table.add((1.0 - eta1) * eta2, 0, 1);
    } else if (const auto* bell = std::get_if<GeometryBell>(&config.geometry)) {
        const auto p = physics::singlet_outcome_probs(
            bell->theta_a_rad, bell->theta_b_rad, config.source.state_visibility);
        const double pp = p[0], pm = p[1], mp = p[2];
        table.add(pp * eta1 * eta2, 1, 1);
        table.add(pp * eta1 * (1.0 - eta2) + pm * eta1, 1, 0);
        table.add(pp * (1.0 - eta1) * eta2 + mp * eta2, 0, 1);
    } else if (const auto* hom = std::get_if<GeometryHom>(&config.geometry)) {
        const double px = hom_coincidence_prob(hom->delay_s, *hom);
        const double bunch = 0.5 * (1.0 - px);  // per output port
        table.add(px * eta1 * eta2, 1, 1);
        table.add(px * eta1 * (1.0 - eta2), 1, 0);
        table.add(px * (1.0 - eta1) * eta2, 0, 1);
        table.add(bunch * eta1 * eta1, 2, 0);
        table.add(bunch * 2.0 * eta1 * (1.0 - eta1), 1, 0);
        table.add(bunch * eta2 * eta2, 0, 2);
        table.add(bunch * 2.0 * eta2 * (1.0 - eta2), 0, 1);
    } else {
        // HBT: one signal photon per pair, split 50:50 onto the detectors.
        table.add(0.5 * eta1, 1, 0);
        table.add(0.5 * eta2, 0, 1);
    }
    table.finalize();
    return table;
}

// Pair count of one visible pulse, conditioned on >= 1 visible pair, by
// inverse CDF of the thinned negative binomial.
std::uint64_t sample_visible_count(Rng& rng, const physics::PairCountDistribution& d) {
    const double p0 = d.prob_zero();
    const double u = p0 + rng.uniform() * (1.0 - p0);
    double pmf = p0;
    double cdf = p0;
    std::uint64_t n = 0;
    while (u >= cdf) {
        pmf *= d.pmf_ratio(n);
        cdf += pmf;
        ++n;
        if (pmf < 1.0e-300 || n > 100000000ull) break;  // beyond any real tail
    }
    return n;
}

struct BlockArrivals {
    std::vector<std::uint64_t> ch1;
    std::vector<std::uint64_t> ch2;
};

// Detection timestamp of a photon emitted at pulse time t: Gaussian jitter,
// snapped to the timeline grid, clamped at zero. Box-Muller from 53-bit
// uniforms never exceeds 8.6 sigma, so jittered tags cannot cross a pulse
// period and a block-local sort leaves the block concatenation sorted.
std::uint64_t detection_time(std::uint64_t t, const DetectorParams& det, Rng& rng) {
    double stamped = static_cast<double>(t);
    if (det.jitter_sigma_ps > 0.0) stamped += rng.normal(0.0, det.jitter_sigma_ps);
    if (stamped < 0.0) stamped = 0.0;
    const double res = static_cast<double>(det.resolution_ps);
    return static_cast<std::uint64_t>(std::llround(stamped / res)) *
           static_cast<std::uint64_t>(det.resolution_ps);
}

void simulate_block(const ExperimentConfig& config, const CategoryTable& table,
                    const physics::PairCountDistribution& visible,
                    std::int64_t block_index, std::int64_t first_pulse,
                    std::int64_t pulses, std::int64_t period_ps,
                    BlockArrivals& out) {
    if (visible.mean() <= 0.0) return;
    const double p0 = visible.prob_zero();
    if (p0 >= 1.0) return;
    const double log_p0 = std::log(p0);

    Rng rng = Rng::substream(config.seed, stream::pulse_physics,
                             static_cast<std::uint64_t>(block_index));
    std::uint64_t pulse = 0;
    const auto remaining = [&] { return static_cast<std::uint64_t>(pulses) - pulse; };
    while (pulse < static_cast<std::uint64_t>(pulses)) {
        const std::uint64_t skip = rng.geometric(log_p0, remaining());
        pulse += skip;
        if (pulse >= static_cast<std::uint64_t>(pulses)) break;
        const std::uint64_t t =
            static_cast<std::uint64_t>(first_pulse + static_cast<std::int64_t>(pulse)) *
            static_cast<std::uint64_t>(period_ps);
        const std::uint64_t k = sample_visible_count(rng, visible);
        for (std::uint64_t i = 0; i < k; ++i) {
            const auto& cat = table.draw(rng);
            for (int c = 0; c < cat.ch1; ++c)
                out.ch1.push_back(detection_time(t, config.detectors, rng));
            for (int c = 0; c < cat.ch2; ++c)
                out.ch2.push_back(detection_time(t, config.detectors, rng));
        }
        ++pulse;
    }
    std::sort(out.ch1.begin(), out.ch1.end());
    std::sort(out.ch2.begin(), out.ch2.end());
}

std::pair<TagStream, TagStream> simulate_impl(const ExperimentConfig& config,
                                              bool parallel) {
    validate(config);
    const std::int64_t period = pulse_period_ps(config);
    const std::int64_t blocks = (config.pulse_count + kBlockPulses - 1) / kBlockPulses;

    const CategoryTable table = build_categories(config);
    const physics::PairCountDistribution visible(
        config.source.mean_pairs_per_pulse * table.visible_prob,
        config.source.mode_count);

    std::vector<BlockArrivals> results(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::int64_t first = b * kBlockPulses;
        const std::int64_t n = std::min<std::int64_t>(kBlockPulses,
                                                      config.pulse_count - first);
        simulate_block(config, table, visible, b, first, n, period,
                       results[static_cast<std::size_t>(b)]);
    }

    // Merge in block order. Blocks are internally sorted and cannot overlap
    // (jitter is bounded well below the pulse period), so the concatenation
    // is sorted.
    std::vector<std::uint64_t> photons1, photons2;
    for (const auto& r : results) {
        photons1.insert(photons1.end(), r.ch1.begin(), r.ch1.end());
        photons2.insert(photons2.end(), r.ch2.begin(), r.ch2.end());
    }

    const double duration = timeline_duration_s(config);
    const auto assemble = [&](std::vector<std::uint64_t>& photons, int channel,
                              double dark_rate) {
        Rng dark_rng = Rng::substream(config.seed, stream::dark_counts,
                                      static_cast<std::uint64_t>(channel));
        std::vector<std::uint64_t> darks;
        if (dark_rate > 0.0) {
            const double rate_per_ps = dark_rate * 1.0e-12;
            const double duration_ps = duration * 1.0e12;
            const double res = static_cast<double>(config.detectors.resolution_ps);
            double t = dark_rng.exponential(rate_per_ps);
            while (t < duration_ps) {
                darks.push_back(static_cast<std::uint64_t>(std::llround(t / res)) *
                                static_cast<std::uint64_t>(config.detectors.resolution_ps));
                t += dark_rng.exponential(rate_per_ps);
            }
        }

        TagStream out;
        out.channel_id = channel;
        out.tags_ps.reserve(photons.size() + darks.size());
        out.origins.reserve(photons.size() + darks.size());
        std::size_t i = 0, j = 0;
        const double dead = config.detectors.dead_time_ps;
        double last_kept = -1.0e30;
        const auto push = [&](std::uint64_t t, TagOrigin origin) {
            if (dead > 0.0 && static_cast<double>(t) - last_kept < dead) return;
            last_kept = static_cast<double>(t);
            out.tags_ps.push_back(t);
            out.origins.push_back(origin);
        };
        while (i < photons.size() || j < darks.size()) {
            if (j >= darks.size() || (i < photons.size() && photons[i] <= darks[j]))
                push(photons[i++], TagOrigin::Photon);
            else
                push(darks[j++], TagOrigin::Dark);
        }
        return out;
    };

    TagStream s1 = assemble(photons1, 1, config.channels.dark_rate_hz1);
    TagStream s2 = assemble(photons2, 2, config.channels.dark_rate_hz2);
    return {std::move(s1), std::move(s2)};
}

}  // namespace

void validate(const ExperimentConfig& config) {
    physics::validate(config.source);
    physics::validate(config.channels);
    require(config.pulse_count > 0, "config: pulse count must be > 0");
    require(config.detectors.jitter_sigma_ps >= 0.0, "config: jitter sigma must be >= 0");
    require(config.detectors.dead_time_ps >= 0.0, "config: dead time must be >= 0");
    require(config.detectors.resolution_ps >= 1, "config: resolution must be >= 1 ps");
    if (const auto* hom = std::get_if<GeometryHom>(&config.geometry)) {
        require(hom->indistinguishability >= 0.0 && hom->indistinguishability <= 1.0,
                "config: indistinguishability must be in [0,1]");
        require(hom->sinc_width_s > 0.0 && hom->gauss_width_s > 0.0,
                "config: HOM widths must be > 0");
    }
    if (std::holds_alternative<GeometryBell>(config.geometry)) {
        require(config.source.polarization == physics::Polarization::Type2Singlet,
                "config: Bell geometry requires a type-2 singlet source");
    }
    const std::int64_t period =
        static_cast<std::int64_t>(std::llround(1.0e12 / config.channels.rep_rate_hz));
    require(period >= 1, "config: rep rate above the 1-ps timeline resolution");
    require(config.pulse_count <=
                (std::numeric_limits<std::int64_t>::max() - 1000000) / period,
            "config: timeline overflows the 64-bit picosecond axis");
}

std::int64_t pulse_period_ps(const ExperimentConfig& config) {
    return static_cast<std::int64_t>(std::llround(1.0e12 / config.channels.rep_rate_hz));
}

double timeline_duration_s(const ExperimentConfig& config) {
    return static_cast<double>(config.pulse_count) *
           static_cast<double>(pulse_period_ps(config)) * 1.0e-12;
}

std::pair<TagStream, TagStream> simulate(const ExperimentConfig& config) {
    return simulate_impl(config, true);
}

std::pair<TagStream, TagStream> simulate_serial(const ExperimentConfig& config) {
    return simulate_impl(config, false);
}

std::uint64_t sample_pairs(const physics::PairSourceModel& source, Rng& rng) {
    physics::validate(source);
    const physics::PairCountDistribution d(source.mean_pairs_per_pulse,
                                           source.mode_count);
    if (d.mean() == 0.0) return 0;
    const double u = rng.uniform();
    double pmf = d.prob_zero();
    double cdf = pmf;
    std::uint64_t n = 0;
    while (u >= cdf) {
        pmf *= d.pmf_ratio(n);
        cdf += pmf;
        ++n;
        if (pmf < 1.0e-300 || n > 100000000ull) break;
    }
    return n;
}

std::uint64_t thin_loss(std::uint64_t count, double transmission, Rng& rng) {
    require(transmission >= 0.0 && transmission <= 1.0,
            "thinning: transmission must be in [0,1]");
    if (transmission == 1.0) return count;
    if (transmission == 0.0) return 0;
    std::uint64_t kept = 0;
    for (std::uint64_t i = 0; i < count; ++i)
        if (rng.bernoulli(transmission)) ++kept;
    return kept;
}

std::pair<bool, bool> bell_outcome(double theta_a, double theta_b, double v_state,
                                   Rng& rng) {
    const auto p = physics::singlet_outcome_probs(theta_a, theta_b, v_state);
    const double u = rng.uniform();
    if (u < p[0]) return {true, true};
    if (u < p[0] + p[1]) return {true, false};
    if (u < p[0] + p[1] + p[2]) return {false, true};
    return {false, false};
}

double hom_coincidence_prob(double delay_s, const GeometryHom& g) {
    const double d = delay_s - g.center_s;
    const double pi = 3.14159265358979323846;
    const double env = physics::sinc(pi * d / g.sinc_width_s) *
                       std::exp(-d * d / (2.0 * g.gauss_width_s * g.gauss_width_s));
    return 0.5 * (1.0 - g.indistinguishability * env);
}

TagStream detector_response(const std::vector<std::uint64_t>& arrivals_ps,
                            int channel_id, double dark_rate_hz,
                            double duration_s, const DetectorParams& detectors,
                            Rng& jitter_rng, Rng& dark_rng) {
    const double res = static_cast<double>(detectors.resolution_ps);
    const double duration_ps = duration_s * 1.0e12;

    std::vector<std::pair<std::uint64_t, TagOrigin>> tags;
    tags.reserve(arrivals_ps.size());
    for (std::uint64_t t : arrivals_ps) {
        double jittered = static_cast<double>(t);
        if (detectors.jitter_sigma_ps > 0.0)
            jittered += jitter_rng.normal(0.0, detectors.jitter_sigma_ps);
        if (jittered < 0.0) jittered = 0.0;
        const std::uint64_t snapped =
            static_cast<std::uint64_t>(std::llround(jittered / res)) *
            static_cast<std::uint64_t>(detectors.resolution_ps);
        tags.emplace_back(snapped, TagOrigin::Photon);
    }

    if (dark_rate_hz > 0.0) {
        const double rate_per_ps = dark_rate_hz * 1.0e-12;
        double t = dark_rng.exponential(rate_per_ps);
        while (t < duration_ps) {
            const std::uint64_t snapped =
                static_cast<std::uint64_t>(std::llround(t / res)) *
                static_cast<std::uint64_t>(detectors.resolution_ps);
            tags.emplace_back(snapped, TagOrigin::Dark);
            t += dark_rng.exponential(rate_per_ps);
        }
    }

    std::sort(tags.begin(), tags.end());

    TagStream out;
    out.channel_id = channel_id;
    out.tags_ps.reserve(tags.size());
    out.origins.reserve(tags.size());
    const double dead = detectors.dead_time_ps;
    double last_kept = -1.0e30;
    for (const auto& [t, origin] : tags) {
        if (dead > 0.0 && static_cast<double>(t) - last_kept < dead) continue;
        last_kept = static_cast<double>(t);
        out.tags_ps.push_back(t);
        out.origins.push_back(origin);
    }
    return out;
}

}  // namespace spdclab::mc
