#include "spdclab/timetags.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spdclab::tt {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Accumulate matches of s1[i1_begin, i1_end) against s2 into hist.
void sweep_range(const std::vector<std::uint64_t>& t1,
                 const std::vector<std::uint64_t>& t2, std::size_t i1_begin,
                 std::size_t i1_end, std::int64_t range,
                 std::int64_t bin_width, std::vector<std::uint64_t>& hist) {
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = i1_begin; i < i1_end; ++i) {
        const std::int64_t t = static_cast<std::int64_t>(t1[i]);
        // s2 tags with dt = t2 - t in [-range, range)
        while (lo < t2.size() && static_cast<std::int64_t>(t2[lo]) < t - range) ++lo;
        if (hi < lo) hi = lo;
        while (hi < t2.size() && static_cast<std::int64_t>(t2[hi]) < t + range) ++hi;
        for (std::size_t j = lo; j < hi; ++j) {
            const std::int64_t dt = static_cast<std::int64_t>(t2[j]) - t;
            hist[static_cast<std::size_t>((dt + range) / bin_width)]++;
        }
    }
}

CoincidenceHistogram histogram_impl(const TagStream& s1, const TagStream& s2,
                                    std::int64_t bin_width, std::int64_t range,
                                    bool parallel) {
    require(bin_width >= 1, "histogram: bin width must be >= 1 ps");
    require(range > 0 && range % bin_width == 0,
            "histogram: range must be a positive multiple of the bin width");
    require(s1.is_sorted() && s2.is_sorted(), "histogram: streams must be sorted");

    CoincidenceHistogram h;
    h.bin_width_ps = bin_width;
    h.offset_ps = -range;
    const std::size_t bins = static_cast<std::size_t>(2 * range / bin_width);
    h.counts.assign(bins, 0);

    if (s1.tags_ps.empty() || s2.tags_ps.empty()) return h;

    if (!parallel) {
        sweep_range(s1.tags_ps, s2.tags_ps, 0, s1.size(), range, bin_width, h.counts);
        return h;
    }

    const int workers = omp_get_max_threads();
    std::vector<std::vector<std::uint64_t>> partial(
        static_cast<std::size_t>(workers), std::vector<std::uint64_t>(bins, 0));
    const std::size_t chunk = (s1.size() + workers - 1) / workers;
#pragma omp parallel for schedule(static, 1)
    for (int w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(s1.size(), static_cast<std::size_t>(w) * chunk);
        const std::size_t end = std::min(s1.size(), begin + chunk);
        sweep_range(s1.tags_ps, s2.tags_ps, begin, end, range, bin_width,
                    partial[static_cast<std::size_t>(w)]);
    }
    for (const auto& p : partial)
        for (std::size_t k = 0; k < bins; ++k) h.counts[k] += p[k];
    return h;
}

}  // namespace

std::uint64_t CoincidenceHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CoincidenceHistogram coincidence_histogram(const TagStream& s1, const TagStream& s2,
                                           std::int64_t bin_width_ps,
                                           std::int64_t range_ps) {
    return histogram_impl(s1, s2, bin_width_ps, range_ps, true);
}

CoincidenceHistogram coincidence_histogram_serial(const TagStream& s1,
                                                  const TagStream& s2,
                                                  std::int64_t bin_width_ps,
                                                  std::int64_t range_ps) {
    return histogram_impl(s1, s2, bin_width_ps, range_ps, false);
}

CoincidenceHistogram rebin(const CoincidenceHistogram& h, int k) {
    require(k >= 1, "rebin: k must be >= 1");
    require(!h.counts.empty() && h.counts.size() % static_cast<std::size_t>(k) == 0,
            "rebin: k must divide the bin count");
    CoincidenceHistogram out;
    out.bin_width_ps = h.bin_width_ps * k;
    out.offset_ps = h.offset_ps;
    out.counts.resize(h.counts.size() / static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out.counts[i / static_cast<std::size_t>(k)] += h.counts[i];
    return out;
}

CarEstimate car_from_histogram(const CoincidenceHistogram& h,
                               std::int64_t rep_period_ps, std::int64_t window_ps,
                               int n_side_peaks) {
    require(rep_period_ps > window_ps, "car: rep period must exceed the window");
    require(n_side_peaks >= 1, "car: need at least one side peak per side");
    const std::int64_t span = h.offset_ps +
                              static_cast<std::int64_t>(h.counts.size()) * h.bin_width_ps;
    require(-h.offset_ps >= n_side_peaks * rep_period_ps &&
                span >= n_side_peaks * rep_period_ps,
            "car: histogram must span the requested side peaks");

    const auto window_counts = [&](std::int64_t center) {
        std::uint64_t sum = 0;
        for (std::size_t k = 0; k < h.counts.size(); ++k) {
            const std::int64_t c = h.bin_center_ps(k);
            if (c >= center - window_ps / 2 && c < center + window_ps / 2)
                sum += h.counts[k];
        }
        return sum;
    };

    CarEstimate est;
    est.zero_peak_counts = window_counts(0);
    std::uint64_t accidental_total = 0;
    for (int m = 1; m <= n_side_peaks; ++m) {
        accidental_total += window_counts(static_cast<std::int64_t>(m) * rep_period_ps);
        accidental_total += window_counts(-static_cast<std::int64_t>(m) * rep_period_ps);
    }
    est.accidental_peaks_used = 2 * n_side_peaks;
    est.mean_accidental_counts =
        static_cast<double>(accidental_total) / est.accidental_peaks_used;

    if (accidental_total == 0) {
        est.saturated = true;
        est.car = std::numeric_limits<double>::infinity();
        est.stat_uncertainty = 0.0;
        return est;
    }
    est.car = static_cast<double>(est.zero_peak_counts) / est.mean_accidental_counts;
    // Poisson propagation: numerator and the summed accidentals.
    if (est.zero_peak_counts > 0)
        est.stat_uncertainty =
            est.car * std::sqrt(1.0 / static_cast<double>(est.zero_peak_counts) +
                                1.0 / static_cast<double>(accidental_total));
    return est;
}

double singles_rate_hz(const TagStream& s, double duration_s) {
    require(duration_s > 0.0, "singles rate: duration must be > 0");
    return static_cast<double>(s.size()) / duration_s;
}

std::uint64_t coincidences_in_window(const TagStream& s1, const TagStream& s2,
                                     std::int64_t window_ps) {
    require(window_ps > 0, "window: width must be > 0");
    require(s1.is_sorted() && s2.is_sorted(), "window: streams must be sorted");
    const std::int64_t half = window_ps / 2;
    std::uint64_t count = 0;
    std::size_t lo = 0, hi = 0;
    for (std::uint64_t t1 : s1.tags_ps) {
        const std::int64_t t = static_cast<std::int64_t>(t1);
        while (lo < s2.size() && static_cast<std::int64_t>(s2.tags_ps[lo]) < t - half) ++lo;
        if (hi < lo) hi = lo;
        while (hi < s2.size() && static_cast<std::int64_t>(s2.tags_ps[hi]) < t + half) ++hi;
        count += hi - lo;
    }
    return count;
}

}  // namespace spdclab::tt
