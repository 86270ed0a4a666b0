// Command-line harness for the grid softmax / fused attention simulator.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gfat/capacity.hpp"
#include "gfat/errors.hpp"
#include "gfat/experiment.hpp"
#include "gfat/fused.hpp"
#include "gfat/oracle.hpp"
#include "gfat/softmax.hpp"
#include "gfat/tile.hpp"

namespace {

gfat::GridConfig load_grid_config(const std::string& path) {
    return path.empty() ? gfat::GridConfig{} : gfat::GridConfig::load(path);
}

std::optional<gfat::WeightTable> load_weights(const std::string& path, bool use_default) {
    if (!path.empty()) return gfat::load_weight_table(path);
    if (use_default) return gfat::default_fused_weight_table();
    return std::nullopt;
}

void parse_subgrid(const std::string& s, gfat::FusedConfig& cfg) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw gfat::SpecError("subgrid must look like 8x8");
    cfg.subgrid_rows = std::stoi(s.substr(0, x));
    cfg.subgrid_cols = std::stoi(s.substr(x + 1));
}

int run_softmax(const std::string& input, const std::string& mode, const std::string& grid_cfg_path,
                const std::string& out_path, const std::string& ledger_path) {
    const gfat::Matrix64 z = gfat::read_matrix_file(input);
    if (mode == "grid") {
        gfat::CoreGrid grid(load_grid_config(grid_cfg_path));
        const gfat::TiledMatrix out =
            gfat::grid_softmax(gfat::tilize(z), grid, gfat::Scheduler::multi_thread);
        gfat::write_matrix_file(out_path, gfat::untilize(out));
        if (!ledger_path.empty()) {
            gfat::write_ledger_csv(ledger_path, grid, std::nullopt, z.rows());
        }
    } else {
        const auto m = mode == "cpu-cache" ? gfat::CpuSoftmaxMode::cache
                                           : gfat::CpuSoftmaxMode::recompute;
        gfat::CpuSoftmaxStats stats;
        gfat::write_matrix_file(out_path, gfat::cpu_softmax(z, m, &stats));
        std::cout << "exp_evals=" << stats.exp_evals << "\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int run_fused(const std::string& q_path, const std::string& k_path, const gfat::FusedConfig& cfg,
              const std::string& grid_cfg_path, const std::string& out_path,
              const std::string& ledger_path, const std::string& weight_path, bool oracle_check) {
    const gfat::Matrix64 qm = gfat::read_matrix_file(q_path);
    const gfat::Matrix64 km = gfat::read_matrix_file(k_path);
    gfat::CoreGrid grid(load_grid_config(grid_cfg_path));
    const gfat::TiledMatrix out = gfat::fused_attention_weights(
        gfat::tilize(qm), gfat::tilize(km), cfg, grid, gfat::Scheduler::multi_thread);
    const gfat::Matrix64 got = gfat::untilize(out);
    gfat::write_matrix_file(out_path, got);
    if (!ledger_path.empty()) {
        gfat::write_ledger_csv(ledger_path, grid, load_weights(weight_path, true), qm.rows());
    }
    std::cout << "wrote " << out_path << "\n";
    if (oracle_check) {
        const double dev =
            gfat::max_abs_diff(got, gfat::oracle_attention_weights(qm, km, cfg.d_k));
        std::cout << "oracle max deviation: " << dev << "\n";
        if (dev > gfat::kBf16Tolerance) {
            throw gfat::OracleMismatch("fused output deviates from oracle by " +
                                       std::to_string(dev));
        }
    }
    return 0;
}

int run_capacity(const std::string& grid_cfg_path, std::uint64_t memory_bytes,
                 std::size_t subgrid_rows) {
    const gfat::GridConfig cfg = load_grid_config(grid_cfg_path);
    std::printf("%-14s %8s  %s\n", "implementation", "n_max", "assumptions");
    for (auto impl : {gfat::Implementation::cpu_inplace, gfat::Implementation::grid_softmax,
                      gfat::Implementation::grid_fused}) {
        const auto report = gfat::capacity_report(impl, cfg, memory_bytes, subgrid_rows);
        std::printf("%-14s %8zu  ", gfat::to_string(impl), report.n_max);
        for (const auto& [name, value] : report.assumptions) {
            std::printf("%s=%llu ", name.c_str(), static_cast<unsigned long long>(value));
        }
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tile-grid attention kernel simulator"};
    app.require_subcommand(1);

    // softmax
    std::string sm_input, sm_mode = "grid", sm_grid_cfg, sm_out = "softmax_out.gfat", sm_ledger;
    auto* softmax = app.add_subcommand("softmax", "Run a softmax kernel on a GFAT matrix");
    softmax->add_option("--input", sm_input, "Input GFAT matrix")->required();
    softmax->add_option("--mode", sm_mode, "cpu-recompute | cpu-cache | grid")
        ->check(CLI::IsMember({"cpu-recompute", "cpu-cache", "grid"}));
    softmax->add_option("--grid-config", sm_grid_cfg, "Grid config file (key=value)");
    softmax->add_option("--out", sm_out, "Output GFAT matrix");
    softmax->add_option("--ledger", sm_ledger, "CSV ledger dump (grid mode)");

    // fused
    std::string f_q, f_k, f_grid_cfg, f_out = "fused_out.gfat", f_ledger, f_weights,
                f_subgrid = "8x8";
    gfat::FusedConfig fcfg;
    bool f_oracle_check = false;
    auto* fused = app.add_subcommand("fused", "Fused matmul + scaling + softmax kernel");
    fused->add_option("--q", f_q, "Queries, n x d_k GFAT matrix")->required();
    fused->add_option("--k", f_k, "Keys, n x d_k GFAT matrix")->required();
    fused->add_option("--dk", fcfg.d_k, "Attention head dimension");
    fused->add_option("--subgrid", f_subgrid, "Sub-grid, e.g. 8x8");
    fused->add_option("--block-tiles", fcfg.block_tiles, "Tiles per multicast step");
    fused->add_option("--grid-config", f_grid_cfg, "Grid config file");
    fused->add_option("--out", f_out, "Output GFAT matrix");
    fused->add_option("--ledger", f_ledger, "CSV ledger dump");
    fused->add_option("--weight-table", f_weights, "Per-op weights for the ledger dump");
    fused->add_flag("--oracle-check", f_oracle_check, "Compare against the float64 oracle");

    // capacity
    std::string cap_grid_cfg;
    std::uint64_t cap_memory = 8ull << 30;
    std::size_t cap_rows = 9;
    auto* capacity = app.add_subcommand("capacity", "Print maximum sequence lengths");
    capacity->add_option("--grid-config", cap_grid_cfg, "Grid config file");
    capacity->add_option("--memory-bytes", cap_memory, "CPU DRAM size for the in-place bound");
    capacity->add_option("--subgrid-rows", cap_rows, "Sub-grid rows for the fused bound");

    // experiment
    std::string ex_spec, ex_outdir = ".", ex_sched = "multi";
    auto* experiment = app.add_subcommand("experiment", "Run an experiment spec");
    experiment->add_option("--spec", ex_spec, "Spec file (key=value)")->required();
    experiment->add_option("--outdir", ex_outdir, "Output directory for CSVs and matrices");
    experiment->add_option("--scheduler", ex_sched, "single | multi")
        ->check(CLI::IsMember({"single", "multi"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (softmax->parsed()) {
            return run_softmax(sm_input, sm_mode, sm_grid_cfg, sm_out, sm_ledger);
        }
        if (fused->parsed()) {
            parse_subgrid(f_subgrid, fcfg);
            return run_fused(f_q, f_k, fcfg, f_grid_cfg, f_out, f_ledger, f_weights,
                             f_oracle_check);
        }
        if (capacity->parsed()) {
            return run_capacity(cap_grid_cfg, cap_memory, cap_rows);
        }
        if (experiment->parsed()) {
            const auto spec = gfat::ExperimentSpec::load(ex_spec);
            const auto sched = ex_sched == "single" ? gfat::Scheduler::single_thread
                                                    : gfat::Scheduler::multi_thread;
            const auto result = gfat::run_experiment(spec, ex_outdir, sched);
            std::cout << "wrote " << result.ledger_csv_path << "\n"
                      << "wrote " << result.summary_csv_path << "\n";
            return 0;
        }
    } catch (const gfat::OracleMismatch& e) {
        std::cerr << "oracle mismatch: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
