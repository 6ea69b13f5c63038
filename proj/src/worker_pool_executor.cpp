#include "foreaction/worker_pool_executor.hpp"

#include <algorithm>
#include <cerrno>

namespace foreaction {

namespace {

bool severs_chain(const SyscallRequest& req, const SyscallCompletion& c) {
    if (c.rc < 0 || c.status == CompletionStatus::cancelled) return true;
    if (req.type == SyscallType::pread)
        return static_cast<std::uint64_t>(c.rc) < req.length;
    if (req.type == SyscallType::pwrite)
        return static_cast<std::uint64_t>(c.rc) < req.payload.size();
    return false;
}

}  // namespace

std::size_t WorkerPoolExecutor::default_workers(std::uint32_t depth) {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min<std::size_t>(depth, 2 * hw));
}

WorkerPoolExecutor::WorkerPoolExecutor(FileStore& store, std::size_t workers,
                                       std::size_t capacity)
    : store_(store), capacity_(capacity) {
    if (workers == 0) workers = 1;
    workers_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i)
        workers_.emplace_back([this] { worker_loop(); });
}

WorkerPoolExecutor::~WorkerPoolExecutor() {
    {
        std::unique_lock lk(mu_);
        // Entries never run do not count as lost: dispose of them as cancelled.
        counters_.cancelled += staged_.size();
        staged_.clear();
        for (const auto& t : queue_) counters_.cancelled += t.entries.size();
        queue_.clear();
        for (const auto& [pred, t] : gated_) counters_.cancelled += t.entries.size();
        gated_.clear();
        stop_ = true;
    }
    work_cv_.notify_all();
    for (auto& w : workers_) w.join();
}

EntryId WorkerPoolExecutor::prepare(const SyscallRequest& req, bool link) {
    std::unique_lock lk(mu_);
    if (staged_.size() >= capacity_)
        throw CapacityError("worker pool staging area full");
    Entry e;
    e.id = next_id_++;
    e.req = req;
    e.link = link;
    e.pred = last_linked_;
    staged_.push_back(std::move(e));
    last_linked_ = link ? staged_.back().id : 0;
    ++counters_.prepared;
    return EntryId{staged_.back().id};
}

std::size_t WorkerPoolExecutor::submit_all_prepared() {
    std::unique_lock lk(mu_);
    std::size_t n = staged_.size();
    if (n == 0) return 0;

    // Group consecutive linked entries into serial tasks.
    std::vector<Task> tasks;
    Task cur;
    for (auto& e : staged_) {
        bool links = e.link;
        cur.entries.push_back(std::move(e));
        if (!links) {
            tasks.push_back(std::move(cur));
            cur = Task{};
        }
    }
    if (!cur.entries.empty()) tasks.push_back(std::move(cur));  // open chain tail
    staged_.clear();

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        Task t = std::move(tasks[i]);
        // Only the batch's first entry can continue a chain from an earlier
        // batch; later task heads always follow an unlinked entry.
        std::uint64_t pred = t.entries.front().pred;
        if (i == 0 && pred != 0) {
            auto fin = severs_result_.find(pred);
            if (fin == severs_result_.end()) {
                t.gate_pred = pred;
                gated_.emplace(pred, std::move(t));
                continue;
            }
            if (fin->second) {
                cancel_entries_locked(t.entries, 0);
                continue;
            }
        }
        queue_.push_back(std::move(t));
    }
    lk.unlock();
    work_cv_.notify_all();
    return n;
}

void WorkerPoolExecutor::publish_locked(const Entry& e, SyscallCompletion c) {
    std::uint64_t t = ++logical_time_;
    if (trace_ && classify(e.req) == Purity::non_pure) {
        trace_->record(TraceKind::non_pure_exec, e.req.type, e.id,
                       request_digest(e.req), payload_digest(c, {}), t);
    }
    ++counters_.completed;
    severs_result_[e.id] = severs_chain(e.req, c);
    completions_.emplace(e.id, std::move(c));
}

void WorkerPoolExecutor::cancel_entries_locked(const std::vector<Entry>& entries,
                                               std::size_t from) {
    for (std::size_t i = from; i < entries.size(); ++i) {
        SyscallCompletion c;
        c.rc = -ECANCELED;
        c.status = CompletionStatus::cancelled;
        severs_result_[entries[i].id] = true;
        completions_.emplace(entries[i].id, std::move(c));
        ++counters_.cancelled;
        // Cascade into a continuation gated on this entry.
        auto g = gated_.find(entries[i].id);
        if (g != gated_.end()) {
            Task cont = std::move(g->second);
            gated_.erase(g);
            cancel_entries_locked(cont.entries, 0);
        }
    }
}

void WorkerPoolExecutor::run_task_locked(std::unique_lock<std::mutex>& lk, Task task) {
    for (std::size_t i = 0; i < task.entries.size(); ++i) {
        Entry& e = task.entries[i];
        lk.unlock();
        SyscallCompletion c = store_.execute(e.req);
        lk.lock();
        bool severed = severs_chain(e.req, c);
        publish_locked(e, std::move(c));
        done_cv_.notify_all();
        if (severed) {
            cancel_entries_locked(task.entries, i + 1);
            // A continuation gated on the severing entry dies with the chain.
            auto g = gated_.find(e.id);
            if (g != gated_.end()) {
                Task cont = std::move(g->second);
                gated_.erase(g);
                cancel_entries_locked(cont.entries, 0);
            }
            done_cv_.notify_all();
            return;
        }
        // Release a continuation waiting on this entry.
        auto g = gated_.find(e.id);
        if (g != gated_.end()) {
            Task cont = std::move(g->second);
            gated_.erase(g);
            queue_.push_back(std::move(cont));
            work_cv_.notify_one();
        }
    }
}

void WorkerPoolExecutor::worker_loop() {
    std::unique_lock lk(mu_);
    while (true) {
        work_cv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        Task task = std::move(queue_.front());
        queue_.pop_front();
        ++running_;
        run_task_locked(lk, std::move(task));
        --running_;
        done_cv_.notify_all();
    }
}

SyscallCompletion WorkerPoolExecutor::wait_completion(EntryId id) {
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this, id] { return completions_.count(id.value) > 0; });
    auto it = completions_.find(id.value);
    SyscallCompletion c = std::move(it->second);
    completions_.erase(it);
    return c;
}

std::optional<SyscallCompletion> WorkerPoolExecutor::try_peek(EntryId id) {
    std::unique_lock lk(mu_);
    auto it = completions_.find(id.value);
    if (it == completions_.end()) return std::nullopt;
    return it->second;
}

CancelResult WorkerPoolExecutor::cancel_outstanding() {
    CancelResult r;
    std::unique_lock lk(mu_);
    r.cancelled += staged_.size();
    counters_.cancelled += staged_.size();
    staged_.clear();
    while (!queue_.empty()) {
        r.cancelled += queue_.front().entries.size();
        counters_.cancelled += queue_.front().entries.size();
        queue_.pop_front();
    }
    for (auto& [pred, t] : gated_) {
        r.cancelled += t.entries.size();
        counters_.cancelled += t.entries.size();
    }
    gated_.clear();
    // Drain whatever is executing right now.
    done_cv_.wait(lk, [this] { return running_ == 0; });
    for (auto& [id, c] : completions_) {
        if (c.status == CompletionStatus::cancelled) ++r.cancelled;
        else ++r.drained;
    }
    completions_.clear();
    last_linked_ = 0;
    return r;
}

std::uint64_t WorkerPoolExecutor::now() const {
    std::unique_lock lk(mu_);
    return logical_time_;
}

void WorkerPoolExecutor::set_trace(TraceRecorder* recorder) {
    std::unique_lock lk(mu_);
    trace_ = recorder;
}

Executor::Counters WorkerPoolExecutor::counters() const {
    std::unique_lock lk(mu_);
    return counters_;
}

}  // namespace foreaction
