#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "gfat/tile.hpp"

namespace gfat {

struct Coord {
    int row = 0;
    int col = 0;
    auto operator<=>(const Coord&) const = default;
};

std::string to_string(const Coord& c);

// Grid profile. Defaults encode the reference machine: 10x12 grid with the last
// row unavailable for compute, 1 MB SRAM per core of which 488 tiles are
// usable for kernel buffers.
struct GridConfig {
    int grid_rows = 10;
    int grid_cols = 12;
    int compute_rows = 9;
    std::size_t sram_bytes_per_core = 1048576;
    std::size_t sram_usable_tiles = 488;
    // Tiles held back from the usable budget for caching/dataflow buffers.
    std::size_t reserve_tiles = 0;
    // When true, write counts on core row r are multiplied by
    // (compute_rows - r), modeling the per-row writeback stalls. A model
    // knob, not a measurement.
    bool write_row_surcharge = false;
    // Extra load count charged for the first row a core loads.
    std::size_t first_load_surcharge = 0;
    // SRAM scalar capacity used by the fused-kernel capacity formula.
    std::size_t fused_sram_scalars = 500000;

    int compute_cores() const { return compute_rows * grid_cols; }
    std::size_t usable_tiles() const {
        return sram_usable_tiles > reserve_tiles ? sram_usable_tiles - reserve_tiles : 0;
    }
    void validate() const;

    // Plain key=value file, '#' comments.
    static GridConfig load(const std::string& path);
};

enum class OpKind {
    load,
    multicast_recv,
    matmul_tile,
    scale,
    reduce_max,
    reduce_sum,
    xcore_reduce,
    subtract,
    exponentiate,
    normalize,
    write,
};
inline constexpr std::size_t kOpKindCount = 11;
inline constexpr std::array<OpKind, kOpKindCount> kAllOpKinds = {
    OpKind::load,       OpKind::multicast_recv, OpKind::matmul_tile, OpKind::scale,
    OpKind::reduce_max, OpKind::reduce_sum,     OpKind::xcore_reduce, OpKind::subtract,
    OpKind::exponentiate, OpKind::normalize,    OpKind::write,
};

const char* to_string(OpKind kind);
OpKind op_kind_from_string(const std::string& name);

// Per-core counters of tile-granularity operations. Stands in for runtime.
struct CostLedger {
    std::array<std::uint64_t, kOpKindCount> counts{};

    void add(OpKind kind, std::uint64_t n) { counts[static_cast<std::size_t>(kind)] += n; }
    std::uint64_t get(OpKind kind) const { return counts[static_cast<std::size_t>(kind)]; }
    std::uint64_t total() const;

    bool operator==(const CostLedger&) const = default;
};

// Weighted cost view of a ledger (user-supplied cycle weights per op kind).
using WeightTable = std::map<OpKind, double>;
double weighted_total(const CostLedger& ledger, const WeightTable& weights);

namespace detail {

struct Buffer {
    std::size_t capacity = 0;
    std::vector<Tile> tiles;
};

}  // namespace detail

class CoreGrid;

struct Core {
    Coord coord;
    CostLedger ledger;
    std::map<std::string, detail::Buffer> buffers;
    std::size_t occupancy_tiles = 0;
    // Stats vectors visible to other cores from the next phase on.
    std::map<std::string, std::vector<float>> published;
    std::uint64_t send_seq = 0;
};

struct DramWrite {
    std::string phase;
    Coord core;
    std::string matrix;
    std::size_t tiles = 0;
};

// Handed to each per-core kernel closure. All mutation goes through this;
// a closure may only touch its own core plus the NoC/DRAM services.
class CoreContext {
  public:
    CoreContext(CoreGrid& grid, Core& core, std::string phase);

    const Coord& coord() const;
    const GridConfig& config() const;
    CostLedger& ledger();

    // SRAM circular buffers. Capacity is reserved up front against the
    // usable tile budget; throws SramOverflow when the budget is exceeded.
    void alloc_buffer(const std::string& id, std::size_t capacity_tiles);
    void free_buffer(const std::string& id);
    detail::Buffer& buffer(const std::string& id);
    void push_tile(const std::string& id, const Tile& t);

    // Row/column multicast to every other compute core sharing this core's
    // row/column (torus). Delivery happens at the end of the current phase,
    // exactly once per receiver, into the named buffer. A non-negative
    // extent restricts receivers to the first `extent` columns (rows), for
    // kernels placed on a sub-grid.
    void multicast_row(const std::string& dst_buffer, const std::vector<Tile>& tiles,
                       int extent = -1);
    void multicast_col(const std::string& dst_buffer, const std::vector<Tile>& tiles,
                       int extent = -1);

    // DRAM access. Reads are unrestricted; writes are logged with the
    // current phase name.
    const TiledMatrix& dram(const std::string& name) const;
    void dram_write_tile(const std::string& name, std::size_t ti, std::size_t tj, const Tile& t);

    // Cross-core stats exchange. publish() makes a vector visible to peers
    // from the next phase; peer_published() reads what a peer published in
    // an earlier phase.
    void publish(const std::string& key, std::vector<float> values);
    const std::vector<float>& peer_published(const Coord& peer, const std::string& key) const;

  private:
    friend class CoreGrid;
    CoreGrid& grid_;
    Core& core_;
    std::string phase_;
    std::vector<DramWrite> pending_write_log_;
};

using KernelFn = std::function<void(CoreContext&)>;

// A grid program is a sequence of named phases; a phase barrier separates
// consecutive phases. NoC deliveries and cross-core visibility take effect
// at the barrier.
class Program {
  public:
    class Phase {
      public:
        explicit Phase(std::string name) : name_(std::move(name)) {}
        Phase& on(const Coord& core, KernelFn fn);
        const std::string& name() const { return name_; }

      private:
        friend class CoreGrid;
        std::string name_;
        std::vector<std::pair<Coord, KernelFn>> work_;
    };

    Phase& add_phase(const std::string& name);
    bool empty() const { return phases_.empty(); }

  private:
    friend class CoreGrid;
    std::vector<Phase> phases_;
};

enum class Scheduler { single_thread, multi_thread };

class CoreGrid {
  public:
    explicit CoreGrid(GridConfig cfg = {});

    const GridConfig& config() const { return cfg_; }
    Core& core(const Coord& c);
    const Core& core(const Coord& c) const;
    bool is_compute(const Coord& c) const;

    void add_dram_matrix(const std::string& name, TiledMatrix m);
    TiledMatrix& dram_matrix(const std::string& name);
    const TiledMatrix& dram_matrix(const std::string& name) const;

    const std::vector<DramWrite>& dram_write_log() const { return write_log_; }

    // Runs every phase of the program; results are identical under both
    // schedulers. Throws if a referenced core is out of the compute region.
    void run(const Program& program, Scheduler sched = Scheduler::single_thread);

    // Drops all core buffers, ledgers, published stats, DRAM matrices and
    // the write log.
    void reset();
    // Drops per-run core state but keeps DRAM contents.
    void reset_cores();

  private:
    friend class CoreContext;

    struct PendingTransfer {
        Coord src;
        std::uint64_t seq = 0;
        bool along_row = true;
        int extent = -1;
        std::string dst_buffer;
        std::vector<Tile> tiles;
    };

    void enqueue_transfer(PendingTransfer t);
    void deliver_pending();

    GridConfig cfg_;
    std::vector<Core> cores_;
    std::map<std::string, TiledMatrix> dram_;
    std::vector<DramWrite> write_log_;
    std::vector<PendingTransfer> pending_;
    std::mutex pending_mutex_;
};

}  // namespace gfat
