#include "foreaction/sim_executor.hpp"

#include <algorithm>
#include <cerrno>
#include <stdexcept>

namespace foreaction {

namespace {

// A failed or short transfer severs the rest of its link chain, mirroring
// kernel ring semantics.
bool severs_chain(const SyscallRequest& req, const SyscallCompletion& c) {
    if (c.rc < 0 || c.status == CompletionStatus::cancelled) return true;
    if (req.type == SyscallType::pread)
        return static_cast<std::uint64_t>(c.rc) < req.length;
    if (req.type == SyscallType::pwrite)
        return static_cast<std::uint64_t>(c.rc) < req.payload.size();
    return false;
}

}  // namespace

SimExecutor::SimExecutor(DeviceModel device, VirtualFileStore& store, std::size_t capacity)
    : device_(device), store_(store), capacity_(capacity) {
    channel_free_.assign(device_.channels, 0);
}

EntryId SimExecutor::prepare(const SyscallRequest& req, bool link) {
    if (staged_.size() >= capacity_)
        throw CapacityError("sim executor staging area full");
    Entry e;
    e.id = EntryId{next_id_++};
    e.req = req;
    e.link = link;
    // Chain bookkeeping spans submit batches: the previous linked entry gates
    // this one regardless of which batch carried it.
    if (last_linked_ != 0) {
        chain_next_[last_linked_] = e.id.value;
        chain_pred_[e.id.value] = last_linked_;
    }
    last_linked_ = link ? e.id.value : 0;
    EntryId id = e.id;
    staged_.push_back(std::move(e));
    ++counters_.prepared;
    return id;
}

std::size_t SimExecutor::submit_all_prepared() {
    std::size_t n = staged_.size();
    std::vector<Entry> batch = std::move(staged_);
    staged_.clear();
    for (auto& e : batch) {
        std::uint64_t id = e.id.value;
        auto pred_it = chain_pred_.find(id);
        if (pred_it != chain_pred_.end()) {
            std::uint64_t pred = pred_it->second;
            auto fin = severs_result_.find(pred);
            if (fin != severs_result_.end()) {
                std::uint64_t t = std::max(now_, completion_time_[pred]);
                if (fin->second) {
                    complete_cancelled(id, t);
                    continue;
                }
                e.ready = t;
            } else {
                e.gated = true;  // predecessor still staged or pending
            }
        }
        if (!e.gated) {
            e.ready = std::max(e.ready, now_);
            ready_.insert({e.ready, id});
        }
        pending_.emplace(id, std::move(e));
    }
    return n;
}

void SimExecutor::complete_cancelled(std::uint64_t id, std::uint64_t t) {
    SyscallCompletion c;
    c.rc = -ECANCELED;
    c.status = CompletionStatus::cancelled;
    completions_[id] = std::move(c);
    completion_time_[id] = t;
    severs_result_[id] = true;
    ++counters_.cancelled;
    // Cascade through any gated successor.
    auto next = chain_next_.find(id);
    if (next != chain_next_.end()) {
        auto it = pending_.find(next->second);
        if (it != pending_.end() && it->second.gated) {
            pending_.erase(it);
            complete_cancelled(next->second, t);
        }
    }
}

void SimExecutor::run_entry(Entry entry) {
    std::uint64_t id = entry.id.value;
    // Earliest-free channel, lowest index on ties.
    std::uint32_t ch = 0;
    for (std::uint32_t i = 1; i < channel_free_.size(); ++i)
        if (channel_free_[i] < channel_free_[ch]) ch = i;
    std::uint64_t start = std::max(entry.ready, channel_free_[ch]);
    std::uint64_t bytes = 0;
    if (entry.req.type == SyscallType::pread) bytes = entry.req.length;
    else if (entry.req.type == SyscallType::pwrite) bytes = entry.req.payload.size();
    std::uint64_t done = start + device_.service_time(entry.req.type, bytes);
    channel_free_[ch] = done;

    SyscallCompletion c = store_.execute(entry.req);

    device_log_.push_back(DeviceOp{entry.id, entry.req.type, entry.req.offset, bytes,
                                   entry.ready, start, done, ch});
    if (trace_ && classify(entry.req) == Purity::non_pure) {
        trace_->record(TraceKind::non_pure_exec, entry.req.type, id,
                       request_digest(entry.req), payload_digest(c, {}), start);
    }
    ++counters_.completed;
    completion_time_[id] = done;
    bool severs = severs_chain(entry.req, c);
    severs_result_[id] = severs;

    auto next = chain_next_.find(id);
    if (next != chain_next_.end()) {
        auto it = pending_.find(next->second);
        if (it != pending_.end() && it->second.gated) {
            if (severs) {
                pending_.erase(it);
                complete_cancelled(next->second, done);
            } else {
                it->second.gated = false;
                it->second.ready = done;
                ready_.insert({done, next->second});
            }
        }
    }
    completions_[id] = std::move(c);
}

void SimExecutor::run_next_ready() {
    auto first = *ready_.begin();
    ready_.erase(ready_.begin());
    auto it = pending_.find(first.second);
    Entry e = std::move(it->second);
    pending_.erase(it);
    run_entry(std::move(e));
}

SyscallCompletion SimExecutor::wait_completion(EntryId id) {
    while (completions_.count(id.value) == 0) {
        if (ready_.empty())
            throw std::runtime_error("wait_completion: unknown or never-completing entry");
        run_next_ready();
    }
    now_ = std::max(now_, completion_time_[id.value]);
    auto it = completions_.find(id.value);
    SyscallCompletion c = std::move(it->second);
    completions_.erase(it);
    return c;
}

std::optional<SyscallCompletion> SimExecutor::try_peek(EntryId id) {
    // Entries whose ready time has passed would have been started by now.
    while (!ready_.empty() && ready_.begin()->first <= now_) run_next_ready();
    auto it = completions_.find(id.value);
    if (it == completions_.end() || completion_time_[id.value] > now_) return std::nullopt;
    return it->second;
}

CancelResult SimExecutor::cancel_outstanding() {
    CancelResult r;
    r.cancelled += staged_.size();
    counters_.cancelled += staged_.size();
    staged_.clear();
    r.cancelled += pending_.size();
    counters_.cancelled += pending_.size();
    pending_.clear();
    ready_.clear();
    for (auto& [id, c] : completions_) {
        if (c.status == CompletionStatus::cancelled) ++r.cancelled;
        else ++r.drained;
    }
    completions_.clear();
    chain_next_.clear();
    chain_pred_.clear();
    last_linked_ = 0;
    return r;
}

}  // namespace foreaction
