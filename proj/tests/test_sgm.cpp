#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tsgm/sgm.hpp"

using namespace tsgm;

namespace {

MatchingCostVolume random_volume(const SearchRangeMap& ranges, std::mt19937& rng) {
    MatchingCostVolume vol = make_cost_volume<std::uint8_t>(ranges);
    std::uniform_int_distribution<int> dist(0, kMaxMatchingCost);
    for (auto& c : vol.cost)
        c = static_cast<std::uint8_t>(dist(rng));
    return vol;
}

void check_against_oracle(const MatchingCostVolume& vol, const SgmParams& params) {
    const AggregatedCostVolume agg = aggregate_paths(vol, params);
    const oracle::CostGrid ref = oracle::aggregate(vol, params);
    for (int y = 0; y < vol.height(); ++y)
        for (int x = 0; x < vol.width(); ++x) {
            const auto got = agg.at(x, y);
            const auto& want = ref[vol.index(x, y)];
            REQUIRE(got.size() == want.size());
            for (std::size_t j = 0; j < want.size(); ++j)
                CHECK(static_cast<long long>(got[j]) == want[j]);
        }
}

}  // namespace

TEST_CASE("a single pixel aggregates to paths times its matching cost") {
    SearchRangeMap ranges(1, 1, 0, 3);
    MatchingCostVolume vol = make_cost_volume<std::uint8_t>(ranges);
    const std::uint8_t costs[4] = {7, 0, 24, 3};
    std::copy(costs, costs + 4, vol.at(0, 0).begin());

    for (int paths : {4, 8}) {
        SgmParams params;
        params.paths = paths;
        const AggregatedCostVolume agg = aggregate_paths(vol, params);
        for (int j = 0; j < 4; ++j)
            CHECK(agg.at(0, 0)[j] == paths * costs[j]);
    }
}

TEST_CASE("a scanline matches the hand-rolled recursion") {
    std::mt19937 rng(21);
    const SearchRangeMap ranges(5, 1, 0, 3);
    const MatchingCostVolume vol = random_volume(ranges, rng);
    SgmParams params;
    params.paths = 4;  // up/down have no predecessors on a 1-row image
    params.d_max = 4;
    check_against_oracle(vol, params);
}

TEST_CASE("a uniform volume aggregates to paths times the constant") {
    SearchRangeMap ranges(7, 5, 0, 5);
    MatchingCostVolume vol = make_cost_volume<std::uint8_t>(ranges);
    for (auto& c : vol.cost)
        c = 9;
    SgmParams params;
    const AggregatedCostVolume agg = aggregate_paths(vol, params);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x)
            for (const std::uint16_t v : agg.at(x, y))
                CHECK(v == 8 * 9);
}

TEST_CASE("random full-range volumes match the oracle for every path set") {
    std::mt19937 rng(22);
    for (int trial = 0; trial < 3; ++trial) {
        const SearchRangeMap ranges = SearchRangeMap::full(9, 6, 5);
        const MatchingCostVolume vol = random_volume(ranges, rng);
        for (auto [paths, set] :
             {std::pair{8, PathSet::nondiagonal}, {4, PathSet::nondiagonal}, {4, PathSet::diagonal}}) {
            SgmParams params;
            params.paths = paths;
            params.path_set = set;
            params.d_max = 5;
            check_against_oracle(vol, params);
        }
    }
}

TEST_CASE("ragged per-pixel ranges match the oracle") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 4; ++trial) {
        const SearchRangeMap ranges = oracle::random_ranges(8, 7, 9, rng);
        const MatchingCostVolume vol = random_volume(ranges, rng);
        SgmParams params;
        params.d_max = 9;
        check_against_oracle(vol, params);
        SgmParams diag4 = params;
        diag4.paths = 4;
        diag4.path_set = PathSet::diagonal;
        check_against_oracle(vol, diag4);
    }
}

TEST_CASE("aggregation stays within the per-path normalization envelope") {
    std::mt19937 rng(24);
    const SearchRangeMap ranges = oracle::random_ranges(10, 8, 7, rng);
    const MatchingCostVolume vol = random_volume(ranges, rng);
    SgmParams params;
    const AggregatedCostVolume agg = aggregate_paths(vol, params);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) {
            const auto c = vol.at(x, y);
            const auto a = agg.at(x, y);
            for (std::size_t j = 0; j < c.size(); ++j) {
                CHECK(a[j] >= params.paths * static_cast<int>(c[j]));
                CHECK(a[j] <= params.paths * (static_cast<int>(c[j]) + params.p2));
            }
        }
}

TEST_CASE("default penalties keep the aggregate inside 16 bits") {
    SgmParams params;
    CHECK((kMaxMatchingCost + params.p2) * params.paths <= 65535);
}

TEST_CASE("winner selection") {
    SUBCASE("plain argmin over the pixel's range") {
        SearchRangeMap ranges(7, 7, 3, 5);
        AggregatedCostVolume agg = make_cost_volume<std::uint16_t>(ranges);
        const std::uint16_t costs[3] = {5, 2, 9};
        std::copy(costs, costs + 3, agg.at(3, 3).begin());
        const DisparityMap dm = winner_takes_all(agg);
        CHECK(dm.is_valid(3, 3));
        CHECK(dm.d(3, 3) == 4);
    }
    SUBCASE("ties resolve to the smaller disparity") {
        SearchRangeMap ranges(7, 7, 0, 1);
        AggregatedCostVolume agg = make_cost_volume<std::uint16_t>(ranges);
        agg.at(3, 3)[0] = 2;
        agg.at(3, 3)[1] = 2;
        CHECK(winner_takes_all(agg).d(3, 3) == 0);
    }
    SUBCASE("census border margin comes out invalid") {
        SearchRangeMap ranges(8, 8, 0, 2);
        const AggregatedCostVolume agg = make_cost_volume<std::uint16_t>(ranges);
        const DisparityMap dm = winner_takes_all(agg);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                CHECK(dm.is_valid(x, y) == (x >= 2 && x < 6 && y >= 2 && y < 6));
    }
    SUBCASE("random volumes agree with the linear-scan oracle") {
        std::mt19937 rng(25);
        const SearchRangeMap ranges = oracle::random_ranges(11, 9, 8, rng);
        AggregatedCostVolume agg = make_cost_volume<std::uint16_t>(ranges);
        std::uniform_int_distribution<int> dist(0, 500);
        for (auto& c : agg.cost)
            c = static_cast<std::uint16_t>(dist(rng));
        const DisparityMap got = winner_takes_all(agg);
        const DisparityMap want = oracle::wta(oracle::grid_from_volume(agg), ranges);
        CHECK(got == want);
    }
}

TEST_CASE("winner always lies inside the pixel's range") {
    std::mt19937 rng(26);
    const SearchRangeMap ranges = oracle::random_ranges(10, 10, 12, rng);
    AggregatedCostVolume agg = make_cost_volume<std::uint16_t>(ranges);
    std::uniform_int_distribution<int> dist(0, 300);
    for (auto& c : agg.cost)
        c = static_cast<std::uint16_t>(dist(rng));
    const DisparityMap dm = winner_takes_all(agg);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            if (dm.is_valid(x, y)) {
                CHECK(dm.d(x, y) >= ranges.lo(x, y));
                CHECK(dm.d(x, y) <= ranges.hi(x, y));
            }
}

TEST_CASE("median refinement") {
    SUBCASE("a constant valid map keeps its values; corners lose quorum") {
        DisparityMap dm(6, 6);
        dm.d.fill(14);
        dm.valid.fill(1);
        const DisparityMap out = median_refine(dm);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                // out-of-bounds neighbors count as missing, so the four
                // corners see only 4 of 9 and drop out
                const bool corner = (x == 0 || x == 5) && (y == 0 || y == 5);
                CHECK(out.is_valid(x, y) == !corner);
                if (out.is_valid(x, y))
                    CHECK(out.d(x, y) == 14);
            }
    }
    SUBCASE("a single spike is replaced by its neighborhood") {
        DisparityMap dm(7, 7);
        dm.d.fill(10);
        dm.valid.fill(1);
        dm.d(3, 3) = 100;
        CHECK(median_refine(dm).d(3, 3) == 10);
    }
    SUBCASE("fewer than five valid neighbors invalidates the output") {
        DisparityMap dm(5, 5);  // all invalid except one pixel
        dm.d(2, 2) = 8;
        dm.valid(2, 2) = 1;
        const DisparityMap out = median_refine(dm);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x)
                CHECK_FALSE(out.is_valid(x, y));
    }
    SUBCASE("invalid holes fill from a mostly valid neighborhood") {
        DisparityMap dm(5, 5);
        dm.d.fill(21);
        dm.valid.fill(1);
        dm.valid(2, 2) = 0;
        const DisparityMap out = median_refine(dm);
        CHECK(out.is_valid(2, 2));
        CHECK(out.d(2, 2) == 21);
    }
    SUBCASE("random maps agree with the sort-based oracle") {
        std::mt19937 rng(27);
        std::uniform_int_distribution<int> dval(0, 60);
        std::uniform_int_distribution<int> dvalid(0, 3);
        for (int trial = 0; trial < 5; ++trial) {
            DisparityMap dm(9, 8);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 9; ++x) {
                    dm.d(x, y) = dval(rng);
                    dm.valid(x, y) = dvalid(rng) > 0 ? 1 : 0;
                }
            CHECK(median_refine(dm) == oracle::median3(dm));
        }
    }
}

TEST_CASE("a shifted pair matches at the known disparity on the interior") {
    std::mt19937 rng(28);
    const int k = 5;
    const auto [l, r] = oracle::shifted_pair(40, 20, k, rng);
    const DisparityMap dm = sgm_match(l, r, SearchRangeMap::full(40, 20, 16), SgmParams{.d_max = 16});
    int checked = 0;
    for (int y = 4; y < 16; ++y)
        for (int x = k + 4; x < 36; ++x) {
            REQUIRE(dm.is_valid(x, y));
            CHECK(dm.d(x, y) == k);
            ++checked;
        }
    CHECK(checked > 200);
}

TEST_CASE("degenerate single-level ranges force the output") {
    std::mt19937 rng(29);
    const GrayImage l = oracle::random_gray(20, 12, rng);
    const GrayImage r = oracle::random_gray(20, 12, rng);
    const DisparityMap dm = sgm_match(l, r, SearchRangeMap(20, 12, 6, 6), SgmParams{.d_max = 16});
    for (int y = 2; y < 10; ++y)
        for (int x = 2; x < 18; ++x) {
            REQUIRE(dm.is_valid(x, y));
            CHECK(dm.d(x, y) == 6);
        }
}

TEST_CASE("results are bit-identical across thread counts") {
    std::mt19937 rng(30);
    const auto [l, r] = oracle::shifted_pair(45, 30, 7, rng);
    const auto ranges = SearchRangeMap::full(45, 30, 12);
    const SgmParams params{.d_max = 12};
    const DisparityMap a = sgm_match(l, r, ranges, params, 1);
    const DisparityMap b = sgm_match(l, r, ranges, params, 3);
    const DisparityMap c = sgm_match(l, r, ranges, params, 8);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(median_refine(a, 1) == median_refine(a, 5));
}

TEST_CASE("parameter validation rejects broken penalty and path settings") {
    SgmParams params;
    params.p1 = 0;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = {};
    params.p1 = 70;  // exceeds p2
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = {};
    params.paths = 6;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = {};
    params.d_max = 0;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}
