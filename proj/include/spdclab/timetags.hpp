// Time-tag post-processing: coincidence histogramming, rebinning, CAR
// extraction and singles rates. Delta-t convention is t2 - t1 throughout,
// with bin k covering [offset + k*bin_width, offset + (k+1)*bin_width).

#pragma once

#include <cstdint>
#include <vector>

#include "spdclab/tagstream.hpp"

namespace spdclab::tt {

struct CoincidenceHistogram {
    std::int64_t bin_width_ps = 1;
    std::int64_t offset_ps = 0;  // left edge of bin 0
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
    std::int64_t bin_center_ps(std::size_t k) const {
        return offset_ps + static_cast<std::int64_t>(k) * bin_width_ps + bin_width_ps / 2;
    }
};

struct CarEstimate {
    double car = 0.0;
    std::uint64_t zero_peak_counts = 0;
    double mean_accidental_counts = 0.0;
    int accidental_peaks_used = 0;
    double stat_uncertainty = 0.0;
    bool saturated = false;  // no accidental counts; CAR undefined
};

// Histogram of t2 - t1 over all tag pairs with |dt| <= range, computed by an
// ordered two-pointer sweep. Bins span [-range, +range) so `range` must be a
// positive multiple of `bin_width`. The OpenMP version partitions the first
// stream across workers and sums partial histograms; it is exactly equal to
// the serial reference for any worker count.
CoincidenceHistogram coincidence_histogram(const TagStream& s1, const TagStream& s2,
                                           std::int64_t bin_width_ps,
                                           std::int64_t range_ps);
CoincidenceHistogram coincidence_histogram_serial(const TagStream& s1,
                                                  const TagStream& s2,
                                                  std::int64_t bin_width_ps,
                                                  std::int64_t range_ps);

// Merge groups of k adjacent bins; k must divide the bin count.
CoincidenceHistogram rebin(const CoincidenceHistogram& h, int k);

// CAR: counts in the window around dt = 0 over the mean of the windows around
// dt = m * rep_period for the n_side_peaks nearest m on each side. A window
// around center c sums the bins whose centers lie in [c - w/2, c + w/2).
CarEstimate car_from_histogram(const CoincidenceHistogram& h,
                               std::int64_t rep_period_ps, std::int64_t window_ps,
                               int n_side_peaks);

double singles_rate_hz(const TagStream& s, double duration_s);

// Number of tag pairs with t2 - t1 in [-window/2, +window/2).
std::uint64_t coincidences_in_window(const TagStream& s1, const TagStream& s2,
                                     std::int64_t window_ps);

}  // namespace spdclab::tt
