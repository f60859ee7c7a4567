#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spdclab/rng.hpp"
#include "spdclab/timetags.hpp"

using namespace spdclab;

namespace {

// O(n^2) all-pairs reference histogrammer.
tt::CoincidenceHistogram brute_force(const TagStream& s1, const TagStream& s2,
                                     std::int64_t bin_width, std::int64_t range) {
    tt::CoincidenceHistogram h;
    h.bin_width_ps = bin_width;
    h.offset_ps = -range;
    h.counts.assign(static_cast<std::size_t>(2 * range / bin_width), 0);
    for (std::uint64_t t1 : s1.tags_ps) {
        for (std::uint64_t t2 : s2.tags_ps) {
            const std::int64_t dt =
                static_cast<std::int64_t>(t2) - static_cast<std::int64_t>(t1);
            if (dt >= -range && dt < range)
                h.counts[static_cast<std::size_t>((dt + range) / bin_width)]++;
        }
    }
    return h;
}

TagStream random_stream(Rng& rng, int channel, std::size_t n, std::uint64_t span) {
    TagStream s;
    s.channel_id = channel;
    for (std::size_t i = 0; i < n; ++i)
        s.tags_ps.push_back(rng.next_u64() % span);
    std::sort(s.tags_ps.begin(), s.tags_ps.end());
    return s;
}

}  // namespace

TEST_CASE("single coinciding tag lands in the zero bin") {
    TagStream s1, s2;
    s1.channel_id = 1;
    s2.channel_id = 2;
    s1.tags_ps = {1000};
    s2.tags_ps = {1000};
    const auto h = tt::coincidence_histogram(s1, s2, 256, 2560);
    CHECK(h.total() == 1);
    // dt = 0 lies in the bin whose left edge is 0
    const std::size_t zero_bin = static_cast<std::size_t>((0 + 2560) / 256);
    CHECK(h.counts[zero_bin] == 1);
}

TEST_CASE("periodic streams produce equal peaks at the laser period") {
    // Tags every 12.5 ns on both channels, channel 2 shifted by 100 ps.
    TagStream s1, s2;
    s1.channel_id = 1;
    s2.channel_id = 2;
    for (int i = 0; i < 2000; ++i) {
        s1.tags_ps.push_back(static_cast<std::uint64_t>(i) * 12500);
        s2.tags_ps.push_back(static_cast<std::uint64_t>(i) * 12500 + 100);
    }
    const auto h = tt::coincidence_histogram(s1, s2, 256, 51200);
    // Peaks at dt = 100 + k * 12500; interior peaks have equal counts.
    std::vector<std::uint64_t> peak_counts;
    for (int m = -3; m <= 3; ++m) {
        std::uint64_t sum = 0;
        for (std::size_t k = 0; k < h.counts.size(); ++k) {
            const std::int64_t c = h.bin_center_ps(k);
            if (std::llabs(c - (100 + m * 12500)) <= 1280) sum += h.counts[k];
        }
        peak_counts.push_back(sum);
    }
    for (std::size_t i = 1; i < peak_counts.size(); ++i) {
        CHECK(peak_counts[i] >= 1996);
        CHECK(peak_counts[i] <= 2000);
    }
    // dt = m*12500 + 100 fits the range for m in [-4, 4]; each peak loses |m|
    // edge pulses: total = sum over m of (2000 - |m|).
    CHECK(h.total() == 9 * 2000 - 20);
}

TEST_CASE("two-pointer sweep equals the all-pairs oracle on 200 random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n1 = 1 + rng.next_u64() % 300;
        const std::size_t n2 = 1 + rng.next_u64() % 300;
        const std::uint64_t span = 1000 + rng.next_u64() % 20000;
        const std::int64_t bin = 1 + static_cast<std::int64_t>(rng.next_u64() % 64);
        const std::int64_t range = bin * (1 + static_cast<std::int64_t>(rng.next_u64() % 40));
        const TagStream s1 = random_stream(rng, 1, n1, span);
        const TagStream s2 = random_stream(rng, 2, n2, span);

        const auto expect = brute_force(s1, s2, bin, range);
        const auto serial = tt::coincidence_histogram_serial(s1, s2, bin, range);
        const auto parallel = tt::coincidence_histogram(s1, s2, bin, range);
        CHECK(serial.counts == expect.counts);
        CHECK(parallel.counts == expect.counts);
    }
}

TEST_CASE("parallel histogram is independent of the worker count") {
    Rng rng(7);
    const TagStream s1 = random_stream(rng, 1, 20000, 1000000);
    const TagStream s2 = random_stream(rng, 2, 20000, 1000000);
    const auto reference = tt::coincidence_histogram_serial(s1, s2, 16, 4096);
    for (int workers : {1, 2, 5, 8}) {
        omp_set_num_threads(workers);
        const auto h = tt::coincidence_histogram(s1, s2, 16, 4096);
        CHECK(h.counts == reference.counts);
    }
    omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("histogram mirror symmetry at 1-ps bins") {
    Rng rng(3);
    const TagStream s1 = random_stream(rng, 1, 400, 5000);
    const TagStream s2 = random_stream(rng, 2, 400, 5000);
    const auto fwd = tt::coincidence_histogram(s1, s2, 1, 600);
    const auto rev = tt::coincidence_histogram(s2, s1, 1, 600);
    const std::size_t n = fwd.counts.size();
    for (std::size_t k = 0; k < n; ++k) {
        // dt bin [d, d+1) mirrors onto [-d, -d+1) exactly at unit width
        const std::int64_t d = fwd.offset_ps + static_cast<std::int64_t>(k);
        const std::size_t mirrored = static_cast<std::size_t>(-d + 600);
        if (mirrored < n) CHECK(fwd.counts[k] == rev.counts[mirrored]);
    }
}

TEST_CASE("histogram is invariant under a common time shift") {
    Rng rng(4);
    TagStream s1 = random_stream(rng, 1, 500, 100000);
    TagStream s2 = random_stream(rng, 2, 500, 100000);
    const auto before = tt::coincidence_histogram(s1, s2, 128, 2560);
    for (auto& t : s1.tags_ps) t += 777777;
    for (auto& t : s2.tags_ps) t += 777777;
    const auto after = tt::coincidence_histogram(s1, s2, 128, 2560);
    CHECK(before.counts == after.counts);
}

TEST_CASE("histogram rejects unsorted streams and bad ranges") {
    TagStream s1, s2;
    s1.tags_ps = {5, 3};
    s2.tags_ps = {1};
    CHECK_THROWS(tt::coincidence_histogram(s1, s2, 16, 160));
    s1.tags_ps = {3, 5};
    CHECK_THROWS(tt::coincidence_histogram(s1, s2, 16, 100));  // not a multiple
    CHECK_THROWS(tt::coincidence_histogram(s1, s2, 0, 160));
}

TEST_CASE("rebin: identity, factor 10, conservation, divisor check") {
    tt::CoincidenceHistogram h;
    h.bin_width_ps = 256;
    h.offset_ps = -2560;
    h.counts = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};

    const auto same = tt::rebin(h, 1);
    CHECK(same.counts == h.counts);
    CHECK(same.bin_width_ps == 256);

    const auto coarse = tt::rebin(h, 10);
    CHECK(coarse.bin_width_ps == 2560);
    CHECK(coarse.counts.size() == 2);
    CHECK(coarse.counts[0] == 55);
    CHECK(coarse.counts[1] == 155);

    for (int k : {1, 2, 4, 5, 10, 20}) {
        CHECK(tt::rebin(h, k).total() == h.total());
    }
    CHECK_THROWS(tt::rebin(h, 3));
    CHECK_THROWS(tt::rebin(h, 0));
}

TEST_CASE("car extraction from a hand-built histogram") {
    tt::CoincidenceHistogram h;
    h.bin_width_ps = 2500;
    h.offset_ps = -36250;
    h.counts.assign(29, 0);
    // centers at 2500*k - 35000: zero peak at k=14, side peaks every 5 bins
    h.counts[14] = 100;
    h.counts[19] = 10;
    h.counts[24] = 10;
    h.counts[9] = 10;
    h.counts[4] = 10;
    const auto est = tt::car_from_histogram(h, 12500, 2500, 2);
    CHECK(est.zero_peak_counts == 100);
    CHECK(est.mean_accidental_counts == 10.0);
    CHECK(est.accidental_peaks_used == 4);
    CHECK(est.car == 10.0);
    CHECK(est.stat_uncertainty ==
          doctest::Approx(10.0 * std::sqrt(1.0 / 100.0 + 1.0 / 40.0)).epsilon(1e-12));
    CHECK_FALSE(est.saturated);

    h.counts[19] = h.counts[24] = h.counts[9] = h.counts[4] = 0;
    const auto sat = tt::car_from_histogram(h, 12500, 2500, 2);
    CHECK(sat.saturated);
    CHECK(std::isinf(sat.car));

    CHECK_THROWS(tt::car_from_histogram(h, 2000, 2500, 2));   // period < window
    CHECK_THROWS(tt::car_from_histogram(h, 12500, 2500, 4));  // span too small
}

TEST_CASE("singles rates") {
    TagStream s;
    CHECK(tt::singles_rate_hz(s, 2.0) == 0.0);
    s.tags_ps.assign(960, 0);
    std::iota(s.tags_ps.begin(), s.tags_ps.end(), 0);
    CHECK(tt::singles_rate_hz(s, 1.0) == 960.0);
    CHECK_THROWS(tt::singles_rate_hz(s, 0.0));

    // Poisson stream at 2 kHz over 50 s
    Rng rng(88);
    TagStream p;
    double t = 0.0;
    while ((t += rng.exponential(2000.0 * 1.0e-12)) < 50.0e12)
        p.tags_ps.push_back(static_cast<std::uint64_t>(t));
    const double rate = tt::singles_rate_hz(p, 50.0);
    CHECK(std::abs(rate - 2000.0) < 4.0 * std::sqrt(2000.0 / 50.0));
}

TEST_CASE("window coincidence counting equals a direct scan") {
    Rng rng(17);
    const TagStream s1 = random_stream(rng, 1, 800, 40000);
    const TagStream s2 = random_stream(rng, 2, 800, 40000);
    const std::int64_t window = 512;
    std::uint64_t expected = 0;
    for (std::uint64_t a : s1.tags_ps)
        for (std::uint64_t b : s2.tags_ps) {
            const std::int64_t dt =
                static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a);
            if (dt >= -window / 2 && dt < window / 2) ++expected;
        }
    CHECK(tt::coincidences_in_window(s1, s2, window) == expected);
}

TEST_CASE("tag stream serialization round-trips") {
    Rng rng(19);
    std::vector<TagStream> streams{random_stream(rng, 1, 137, 100000),
                                   random_stream(rng, 2, 91, 100000)};

    std::ostringstream csv;
    write_tags_csv(csv, streams);
    std::istringstream csv_in(csv.str());
    const auto from_csv = read_tags_csv(csv_in);
    REQUIRE(from_csv.size() == 2);
    CHECK(from_csv[0].channel_id == 1);
    CHECK(from_csv[0].tags_ps == streams[0].tags_ps);
    CHECK(from_csv[1].tags_ps == streams[1].tags_ps);

    std::ostringstream bin;
    write_tags_binary(bin, streams);
    std::istringstream bin_in(bin.str());
    const auto from_bin = read_tags_binary(bin_in);
    REQUIRE(from_bin.size() == 2);
    CHECK(from_bin[0].tags_ps == streams[0].tags_ps);
    CHECK(from_bin[1].tags_ps == streams[1].tags_ps);
    CHECK(bin.str().substr(0, 4) == "TPT1");

    std::istringstream bad("XXXX");
    CHECK_THROWS(read_tags_binary(bad));
    std::istringstream bad_csv("wrong,header\n1,2\n");
    CHECK_THROWS(read_tags_csv(bad_csv));
}
