#include <doctest.h>

#include "gfat/capacity.hpp"

using namespace gfat;

TEST_CASE("cpu in-place bound") {
    CHECK(n_max_cpu(8ull << 30) == 46340);
    CHECK(n_max_cpu(4) == 1);
    CHECK(n_max_cpu(400) == 10);
}

TEST_CASE("dedicated softmax bound") {
    GridConfig cfg;
    CHECK(n_max_grid_softmax(cfg) == 15616);
    cfg.sram_usable_tiles = 1;
    CHECK(n_max_grid_softmax(cfg) == 32);
    cfg.sram_usable_tiles = 100;
    CHECK(n_max_grid_softmax(cfg) == 3200);
}

TEST_CASE("fused kernel bound") {
    GridConfig cfg;
    CHECK(n_max_grid_fused(cfg, 9) == 6363);  // 707 * 9
    cfg.fused_sram_scalars = 1024;
    CHECK(n_max_grid_fused(cfg, 1) == 32);
    cfg.fused_sram_scalars = 4000000;
    CHECK(n_max_grid_fused(cfg, 4) == 8000);
}

TEST_CASE("bounds are monotone in capacity") {
    GridConfig small, big;
    small.sram_usable_tiles = 100;
    big.sram_usable_tiles = 200;
    CHECK(n_max_grid_softmax(small) <= n_max_grid_softmax(big));

    small.fused_sram_scalars = 100000;
    big.fused_sram_scalars = 600000;
    CHECK(n_max_grid_fused(small, 9) <= n_max_grid_fused(big, 9));
    CHECK(n_max_cpu(1 << 20) <= n_max_cpu(1 << 21));
}

TEST_CASE("capacity reports echo their assumptions") {
    const GridConfig cfg;
    const CapacityReport r = capacity_report(Implementation::grid_fused, cfg, 8ull << 30, 9);
    CHECK(r.n_max == 6363);
    REQUIRE(r.assumptions.size() == 2);
    CHECK(r.assumptions[0].first == "fused_sram_scalars");
    CHECK(r.assumptions[0].second == 500000);
}
