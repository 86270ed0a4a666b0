#include "gfat/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gfat/capacity.hpp"
#include "gfat/errors.hpp"
#include "gfat/fused.hpp"
#include "gfat/oracle.hpp"
#include "gfat/softmax.hpp"
#include "gfat/tile.hpp"

namespace gfat {

const char* to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::cpu_softmax_recompute: return "cpu_softmax_recompute";
        case KernelKind::cpu_softmax_cache: return "cpu_softmax_cache";
        case KernelKind::grid_softmax: return "grid_softmax";
        case KernelKind::fused: return "fused";
    }
    return "?";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "cpu_softmax_recompute") return KernelKind::cpu_softmax_recompute;
    if (name == "cpu_softmax_cache") return KernelKind::cpu_softmax_cache;
    if (name == "grid_softmax") return KernelKind::grid_softmax;
    if (name == "fused") return KernelKind::fused;
    throw SpecError("unknown kernel: " + name);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t n, std::uint64_t repeat,
                       std::uint64_t salt) {
    std::uint64_t z = seed ^ (n * 0x9E3779B97F4A7C15ull) ^ (repeat * 0xBF58476D1CE4E5B9ull) ^
                      (salt * 0x94D049BB133111EBull);
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
}

}  // namespace

Matrix64 gen_matrix(std::size_t n, std::size_t d, std::uint64_t seed, InputDist dist) {
    if (n == 0 || d == 0 || n % kTileDim != 0 || d % kTileDim != 0) {
        throw DimensionError("gen_matrix dimensions must be positive multiples of 32");
    }
    Matrix64 m(n, d);
    if (dist == InputDist::zeros) return m;
    std::mt19937_64 rng(seed);
    for (double& v : m.data()) {
        // [-1, 1) from the top 53 bits; avoids distribution differences
        // across standard library implementations.
        v = static_cast<double>(rng() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
    }
    return m;
}

void ExperimentSpec::validate() const {
    if (name.empty()) throw SpecError("experiment name must not be empty");
    if (sizes.empty()) throw SpecError("experiment has no sizes");
    if (repeats < 1) throw SpecError("repeats must be >= 1");
    for (std::size_t n : sizes) {
        if (n == 0 || n % kTileDim != 0) {
            throw SpecError("size " + std::to_string(n) + " is not a positive multiple of 32");
        }
        if (kernel == KernelKind::fused) {
            const std::size_t n_tiles = n / kTileDim;
            if (n_tiles % static_cast<std::size_t>(subgrid_rows) != 0 ||
                n_tiles % static_cast<std::size_t>(subgrid_cols) != 0) {
                throw SpecError("size " + std::to_string(n) +
                                " does not partition over the fused sub-grid");
            }
        }
    }
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open experiment spec: " + path);
    ExperimentSpec spec;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        try {
            if (key == "name") spec.name = value;
            else if (key == "kernel") spec.kernel = kernel_kind_from_string(value);
            else if (key == "size") spec.sizes.push_back(std::stoull(value));
            else if (key == "repeats") spec.repeats = std::stoull(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "grid_config") spec.grid_config_path = value;
            else if (key == "weight_table") spec.weight_table_path = value;
            else if (key == "d_k") spec.d_k = std::stoull(value);
            else if (key == "subgrid_rows") spec.subgrid_rows = std::stoi(value);
            else if (key == "subgrid_cols") spec.subgrid_cols = std::stoi(value);
            else if (key == "block_tiles") spec.block_tiles = std::stoull(value);
            else if (key == "dist") {
                if (value == "uniform") spec.dist = InputDist::uniform;
                else if (value == "zeros") spec.dist = InputDist::zeros;
                else throw SpecError("unknown dist: " + value);
            } else throw SpecError("unknown spec key: " + key);
        } catch (const std::invalid_argument&) {
            throw SpecError("bad value for spec key " + key + ": " + value);
        }
    }
    spec.validate();
    return spec;
}

WeightTable load_weight_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open weight table: " + path);
    WeightTable table;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        table[op_kind_from_string(trim(line.substr(0, eq)))] = std::stod(trim(line.substr(eq + 1)));
    }
    return table;
}

WeightTable default_fused_weight_table() {
    return {
        {OpKind::load, 1.0},        {OpKind::multicast_recv, 1.0},
        {OpKind::matmul_tile, 10.0}, {OpKind::scale, 1.0},
        {OpKind::reduce_max, 2.0},  {OpKind::reduce_sum, 2.0},
        {OpKind::xcore_reduce, 3.0}, {OpKind::subtract, 2.0},
        {OpKind::exponentiate, 146.0}, {OpKind::normalize, 104.0},
        {OpKind::write, 4.0},
    };
}

namespace {

void append_ledger_rows(std::ostream& out, const CoreGrid& grid,
                        const std::optional<WeightTable>& weights, std::size_t n) {
    const GridConfig& cfg = grid.config();
    for (int r = 0; r < cfg.compute_rows; ++r) {
        for (int c = 0; c < cfg.grid_cols; ++c) {
            const CostLedger& ledger = grid.core({r, c}).ledger;
            for (OpKind k : kAllOpKinds) {
                const std::uint64_t count = ledger.get(k);
                if (count == 0) continue;
                out << n << ',' << r << ',' << c << ',' << to_string(k) << ',' << count;
                if (weights) {
                    const auto it = weights->find(k);
                    const double w = it == weights->end() ? 1.0 : it->second;
                    out << ',' << w * static_cast<double>(count);
                }
                out << '\n';
            }
        }
    }
}

std::string timestamp_line() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    return std::string("# generated ") + buf + "Z\n";
}

}  // namespace

void write_ledger_csv(const std::string& path, const CoreGrid& grid,
                      const std::optional<WeightTable>& weights, std::size_t n) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write ledger csv: " + path);
    out << timestamp_line();
    out << "n,core_row,core_col,op_kind,count" << (weights ? ",weighted_cost" : "") << '\n';
    append_ledger_rows(out, grid, weights, n);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                Scheduler sched) {
    spec.validate();
    std::filesystem::create_directories(out_dir);

    const GridConfig grid_cfg = spec.grid_config_path.empty()
                                    ? GridConfig{}
                                    : GridConfig::load(spec.grid_config_path);
    std::optional<WeightTable> weights;
    if (!spec.weight_table_path.empty()) weights = load_weight_table(spec.weight_table_path);

    ExperimentResult result;
    result.ledger_csv_path = out_dir + "/" + spec.name + "_ledger.csv";
    result.summary_csv_path = out_dir + "/" + spec.name + "_summary.csv";

    std::ofstream ledger_out(result.ledger_csv_path);
    if (!ledger_out) throw IoError("cannot write " + result.ledger_csv_path);
    ledger_out << timestamp_line();
    ledger_out << "n,core_row,core_col,op_kind,count" << (weights ? ",weighted_cost" : "")
               << '\n';

    CoreGrid grid(grid_cfg);
    std::uint64_t prev_total = 0;

    for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
        const std::size_t n = spec.sizes[si];
        SizeSummary summary;
        summary.n = n;
        double wall_ms_total = 0.0;

        for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            double dev = 0.0;
            std::uint64_t total_count = 0;

            switch (spec.kernel) {
                case KernelKind::cpu_softmax_recompute:
                case KernelKind::cpu_softmax_cache: {
                    const Matrix64 z = gen_matrix(n, n, mix_seed(spec.seed, n, rep, 1), spec.dist);
                    const CpuSoftmaxMode mode = spec.kernel == KernelKind::cpu_softmax_cache
                                                    ? CpuSoftmaxMode::cache
                                                    : CpuSoftmaxMode::recompute;
                    CpuSoftmaxStats stats;
                    const Matrix64 out = cpu_softmax(z, mode, &stats);
                    dev = max_abs_diff(out, oracle_softmax(z));
                    if (dev > 1e-12) {
                        throw OracleMismatch("cpu softmax deviates from oracle at n=" +
                                             std::to_string(n));
                    }
                    total_count = stats.exp_evals;
                    ledger_out << n << ",-1,-1,exponentiate," << stats.exp_evals;
                    if (weights) ledger_out << ',' << static_cast<double>(stats.exp_evals);
                    ledger_out << '\n';
                    write_matrix_file(out_dir + "/" + spec.name + "_n" + std::to_string(n) +
                                          "_result.gfat",
                                      out);
                    break;
                }
                case KernelKind::grid_softmax: {
                    const Matrix64 z = gen_matrix(n, n, mix_seed(spec.seed, n, rep, 1), spec.dist);
                    const TiledMatrix out = grid_softmax(tilize(z), grid, sched);
                    const Matrix64 got = untilize(out);
                    dev = max_abs_diff(got, cpu_softmax(z, CpuSoftmaxMode::cache));
                    if (dev > kBf16Tolerance) {
                        throw OracleMismatch("grid_softmax deviates " + std::to_string(dev) +
                                             " from oracle at n=" + std::to_string(n));
                    }
                    for (int r = 0; r < grid_cfg.compute_rows; ++r) {
                        for (int c = 0; c < grid_cfg.grid_cols; ++c) {
                            total_count += grid.core({r, c}).ledger.total();
                        }
                    }
                    append_ledger_rows(ledger_out, grid, weights, n);
                    write_matrix_file(out_dir + "/" + spec.name + "_n" + std::to_string(n) +
                                          "_result.gfat",
                                      got);
                    break;
                }
                case KernelKind::fused: {
                    const Matrix64 qm =
                        gen_matrix(n, spec.d_k, mix_seed(spec.seed, n, rep, 2), spec.dist);
                    const Matrix64 km =
                        gen_matrix(n, spec.d_k, mix_seed(spec.seed, n, rep, 3), spec.dist);
                    FusedConfig fcfg;
                    fcfg.d_k = spec.d_k;
                    fcfg.subgrid_rows = spec.subgrid_rows;
                    fcfg.subgrid_cols = spec.subgrid_cols;
                    fcfg.block_tiles = spec.block_tiles;
                    try {
                        const TiledMatrix out =
                            fused_attention_weights(tilize(qm), tilize(km), fcfg, grid, sched);
                        const Matrix64 got = untilize(out);
                        dev = max_abs_diff(got, oracle_attention_weights(qm, km, spec.d_k));
                        if (dev > kBf16Tolerance) {
                            throw OracleMismatch("fused kernel deviates " + std::to_string(dev) +
                                                 " from oracle at n=" + std::to_string(n));
                        }
                        write_matrix_file(out_dir + "/" + spec.name + "_n" + std::to_string(n) +
                                              "_result.gfat",
                                          got);
                    } catch (const SramOverflow& e) {
                        throw SramOverflow("n=" + std::to_string(n) + ": " + e.what());
                    }
                    for (int r = 0; r < grid_cfg.compute_rows; ++r) {
                        for (int c = 0; c < grid_cfg.grid_cols; ++c) {
                            total_count += grid.core({r, c}).ledger.total();
                        }
                    }
                    append_ledger_rows(ledger_out, grid, weights, n);
                    break;
                }
            }

            const auto t1 = std::chrono::steady_clock::now();
            wall_ms_total += std::chrono::duration<double, std::milli>(t1 - t0).count();
            summary.total_count = total_count;
            summary.oracle_max_dev = std::max(summary.oracle_max_dev, dev);
        }

        summary.wall_ms = wall_ms_total / static_cast<double>(spec.repeats);
        summary.ratio_vs_prev = si == 0 ? 0.0
                                        : static_cast<double>(summary.total_count) /
                                              static_cast<double>(prev_total);
        prev_total = summary.total_count;
        result.summaries.push_back(summary);
    }

    std::ofstream summary_out(result.summary_csv_path);
    if (!summary_out) throw IoError("cannot write " + result.summary_csv_path);
    summary_out << timestamp_line();
    // Wall-clock times go into comment lines so the data rows are
    // byte-identical across reruns.
    for (const SizeSummary& s : result.summaries) {
        summary_out << "# wall_ms n=" << s.n << ' ' << s.wall_ms << '\n';
    }
    summary_out << "n,total_count,ratio_vs_prev,oracle_max_dev\n";
    for (const SizeSummary& s : result.summaries) {
        std::ostringstream row;
        row << s.n << ',' << s.total_count << ',' << s.ratio_vs_prev << ','
            << (s.oracle_max_dev < 1e-15 ? 0.0 : s.oracle_max_dev) << '\n';
        summary_out << row.str();
    }
    return result;
}

}  // namespace gfat
