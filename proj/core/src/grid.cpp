#include "gfat/grid.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "gfat/errors.hpp"

namespace gfat {

std::string to_string(const Coord& c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

void GridConfig::validate() const {
    if (grid_rows <= 0 || grid_cols <= 0) throw SpecError("grid dimensions must be positive");
    if (compute_rows <= 0 || compute_rows > grid_rows) {
        throw SpecError("compute_rows must be in [1, grid_rows]");
    }
    if (sram_usable_tiles * kTileBytes > sram_bytes_per_core) {
        throw SpecError("sram_usable_tiles exceeds sram_bytes_per_core");
    }
}

GridConfig GridConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid config: " + path);
    GridConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) continue;
        try {
            if (key == "grid_rows") cfg.grid_rows = std::stoi(value);
            else if (key == "grid_cols") cfg.grid_cols = std::stoi(value);
            else if (key == "compute_rows") cfg.compute_rows = std::stoi(value);
            else if (key == "sram_bytes_per_core") cfg.sram_bytes_per_core = std::stoull(value);
            else if (key == "sram_usable_tiles") cfg.sram_usable_tiles = std::stoull(value);
            else if (key == "reserve_tiles") cfg.reserve_tiles = std::stoull(value);
            else if (key == "write_row_surcharge") cfg.write_row_surcharge = (value == "1" || value == "true");
            else if (key == "first_load_surcharge") cfg.first_load_surcharge = std::stoull(value);
            else if (key == "fused_sram_scalars") cfg.fused_sram_scalars = std::stoull(value);
            else throw SpecError("unknown grid config key: " + key);
        } catch (const std::invalid_argument&) {
            throw SpecError("bad value for grid config key " + key + ": " + value);
        }
    }
    cfg.validate();
    return cfg;
}

const char* to_string(OpKind kind) {
    switch (kind) {
        case OpKind::load: return "load";
        case OpKind::multicast_recv: return "multicast_recv";
        case OpKind::matmul_tile: return "matmul_tile";
        case OpKind::scale: return "scale";
        case OpKind::reduce_max: return "reduce_max";
        case OpKind::reduce_sum: return "reduce_sum";
        case OpKind::xcore_reduce: return "xcore_reduce";
        case OpKind::subtract: return "subtract";
        case OpKind::exponentiate: return "exponentiate";
        case OpKind::normalize: return "normalize";
        case OpKind::write: return "write";
    }
    return "?";
}

OpKind op_kind_from_string(const std::string& name) {
    for (OpKind k : kAllOpKinds) {
        if (name == to_string(k)) return k;
    }
    throw SpecError("unknown op kind: " + name);
}

std::uint64_t CostLedger::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

double weighted_total(const CostLedger& ledger, const WeightTable& weights) {
    double sum = 0.0;
    for (OpKind k : kAllOpKinds) {
        const auto it = weights.find(k);
        const double w = it == weights.end() ? 1.0 : it->second;
        sum += w * static_cast<double>(ledger.get(k));
    }
    return sum;
}

CoreContext::CoreContext(CoreGrid& grid, Core& core, std::string phase)
    : grid_(grid), core_(core), phase_(std::move(phase)) {}

const Coord& CoreContext::coord() const { return core_.coord; }
const GridConfig& CoreContext::config() const { return grid_.cfg_; }
CostLedger& CoreContext::ledger() { return core_.ledger; }

void CoreContext::alloc_buffer(const std::string& id, std::size_t capacity_tiles) {
    if (capacity_tiles == 0) throw SpecError("buffer capacity must be positive");
    if (core_.buffers.count(id)) throw SpecError("buffer already allocated: " + id);
    if (core_.occupancy_tiles + capacity_tiles > grid_.cfg_.usable_tiles()) {
        throw SramOverflow("core " + to_string(core_.coord) + ": allocating " +
                           std::to_string(capacity_tiles) + " tiles for buffer '" + id +
                           "' exceeds usable SRAM (" + std::to_string(core_.occupancy_tiles) +
                           " of " + std::to_string(grid_.cfg_.usable_tiles()) + " in use)");
    }
    core_.occupancy_tiles += capacity_tiles;
    core_.buffers[id] = detail::Buffer{capacity_tiles, {}};
}

void CoreContext::free_buffer(const std::string& id) {
    auto it = core_.buffers.find(id);
    if (it == core_.buffers.end()) throw SpecError("no such buffer: " + id);
    core_.occupancy_tiles -= it->second.capacity;
    core_.buffers.erase(it);
}

detail::Buffer& CoreContext::buffer(const std::string& id) {
    auto it = core_.buffers.find(id);
    if (it == core_.buffers.end()) throw SpecError("no such buffer: " + id);
    return it->second;
}

void CoreContext::push_tile(const std::string& id, const Tile& t) {
    detail::Buffer& buf = buffer(id);
    if (buf.tiles.size() >= buf.capacity) {
        throw SramOverflow("core " + to_string(core_.coord) + ": buffer '" + id + "' full (" +
                           std::to_string(buf.capacity) + " tiles)");
    }
    buf.tiles.push_back(t);
}

void CoreContext::multicast_row(const std::string& dst_buffer, const std::vector<Tile>& tiles,
                                int extent) {
    grid_.enqueue_transfer({core_.coord, core_.send_seq++, true, extent, dst_buffer, tiles});
}

void CoreContext::multicast_col(const std::string& dst_buffer, const std::vector<Tile>& tiles,
                                int extent) {
    grid_.enqueue_transfer({core_.coord, core_.send_seq++, false, extent, dst_buffer, tiles});
}

const TiledMatrix& CoreContext::dram(const std::string& name) const {
    return grid_.dram_matrix(name);
}

void CoreContext::dram_write_tile(const std::string& name, std::size_t ti, std::size_t tj,
                                  const Tile& t) {
    // Distinct cores write distinct tiles, so the store itself is race-free;
    // the log is merged in core order at the phase barrier.
    grid_.dram_matrix(name).tile(ti, tj) = t;
    pending_write_log_.push_back({phase_, core_.coord, name, 1});
}

void CoreContext::publish(const std::string& key, std::vector<float> values) {
    core_.published[key] = std::move(values);
}

const std::vector<float>& CoreContext::peer_published(const Coord& peer,
                                                      const std::string& key) const {
    const Core& c = grid_.core(peer);
    auto it = c.published.find(key);
    if (it == c.published.end()) {
        throw SpecError("core " + to_string(peer) + " has not published '" + key + "'");
    }
    return it->second;
}

Program::Phase& Program::Phase::on(const Coord& core, KernelFn fn) {
    work_.emplace_back(core, std::move(fn));
    return *this;
}

Program::Phase& Program::add_phase(const std::string& name) {
    phases_.emplace_back(name);
    return phases_.back();
}

CoreGrid::CoreGrid(GridConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    cores_.resize(static_cast<std::size_t>(cfg_.grid_rows) * cfg_.grid_cols);
    for (int r = 0; r < cfg_.grid_rows; ++r) {
        for (int c = 0; c < cfg_.grid_cols; ++c) {
            cores_[static_cast<std::size_t>(r) * cfg_.grid_cols + c].coord = {r, c};
        }
    }
}

Core& CoreGrid::core(const Coord& c) {
    return cores_[static_cast<std::size_t>(c.row) * cfg_.grid_cols + c.col];
}

const Core& CoreGrid::core(const Coord& c) const {
    return cores_[static_cast<std::size_t>(c.row) * cfg_.grid_cols + c.col];
}

bool CoreGrid::is_compute(const Coord& c) const {
    return c.row >= 0 && c.row < cfg_.compute_rows && c.col >= 0 && c.col < cfg_.grid_cols;
}

void CoreGrid::add_dram_matrix(const std::string& name, TiledMatrix m) {
    dram_[name] = std::move(m);
}

TiledMatrix& CoreGrid::dram_matrix(const std::string& name) {
    auto it = dram_.find(name);
    if (it == dram_.end()) throw SpecError("no DRAM matrix named '" + name + "'");
    return it->second;
}

const TiledMatrix& CoreGrid::dram_matrix(const std::string& name) const {
    auto it = dram_.find(name);
    if (it == dram_.end()) throw SpecError("no DRAM matrix named '" + name + "'");
    return it->second;
}

void CoreGrid::enqueue_transfer(PendingTransfer t) {
    std::lock_guard<std::mutex> lock(pending_mutex_);
    pending_.push_back(std::move(t));
}

void CoreGrid::deliver_pending() {
    // Deterministic delivery order regardless of which thread enqueued first.
    std::sort(pending_.begin(), pending_.end(), [](const PendingTransfer& a, const PendingTransfer& b) {
        if (a.src != b.src) return a.src < b.src;
        return a.seq < b.seq;
    });
    for (const PendingTransfer& t : pending_) {
        const int span = t.along_row ? (t.extent < 0 ? cfg_.grid_cols : t.extent)
                                     : (t.extent < 0 ? cfg_.compute_rows : t.extent);
        for (int i = 0; i < span; ++i) {
            const Coord dst = t.along_row ? Coord{t.src.row, i} : Coord{i, t.src.col};
            if (dst == t.src || !is_compute(dst)) continue;
            Core& recv = core(dst);
            CoreContext ctx(*this, recv, "noc");
            for (const Tile& tile : t.tiles) ctx.push_tile(t.dst_buffer, tile);
            recv.ledger.add(OpKind::multicast_recv, t.tiles.size());
        }
    }
    pending_.clear();
}

void CoreGrid::run(const Program& program, Scheduler sched) {
    for (const Program::Phase& phase : program.phases_) {
        for (const auto& [coord, fn] : phase.work_) {
            if (!is_compute(coord)) {
                throw SpecError("program references non-compute core " + to_string(coord));
            }
        }
        std::vector<CoreContext> contexts;
        contexts.reserve(phase.work_.size());
        for (const auto& [coord, fn] : phase.work_) {
            contexts.emplace_back(*this, core(coord), phase.name_);
        }
        if (sched == Scheduler::single_thread) {
            for (std::size_t i = 0; i < phase.work_.size(); ++i) {
                phase.work_[i].second(contexts[i]);
            }
        } else {
            std::vector<std::exception_ptr> errors(phase.work_.size());
            std::vector<std::thread> threads;
            threads.reserve(phase.work_.size());
            for (std::size_t i = 0; i < phase.work_.size(); ++i) {
                threads.emplace_back([&, i] {
                    try {
                        phase.work_[i].second(contexts[i]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                });
            }
            for (auto& th : threads) th.join();
            for (const auto& err : errors) {
                if (err) std::rethrow_exception(err);
            }
        }
        // Phase barrier: merge write logs in core order, then deliver NoC
        // transfers exactly once per receiver.
        for (CoreContext& ctx : contexts) {
            write_log_.insert(write_log_.end(), ctx.pending_write_log_.begin(),
                              ctx.pending_write_log_.end());
        }
        deliver_pending();
    }
}

void CoreGrid::reset() {
    reset_cores();
    dram_.clear();
}

void CoreGrid::reset_cores() {
    for (Core& c : cores_) {
        c.ledger = CostLedger{};
        c.buffers.clear();
        c.occupancy_tiles = 0;
        c.published.clear();
        c.send_seq = 0;
    }
    pending_.clear();
    write_log_.clear();
}

}  // namespace gfat
