#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "foreaction/executor.hpp"
#include "foreaction/graph.hpp"
#include "foreaction/trace.hpp"

namespace foreaction {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GraphMismatchError : EngineError {
    using EngineError::EngineError;
};
struct ArgsMismatchError : EngineError {
    using EngineError::EngineError;
};
struct ChoiceNotReadyError : EngineError {
    using EngineError::EngineError;
};
struct SessionStateError : EngineError {
    using EngineError::EngineError;
};

// Application-state values captured at function entry; read-only afterwards.
class InputVarSet {
public:
    using Value = std::variant<std::uint64_t, std::int64_t, std::string>;

    InputVarSet& set(std::string name, Value v) {
        vars_[std::move(name)] = std::move(v);
        return *this;
    }
    const Value* get(const std::string& name) const {
        auto it = vars_.find(name);
        return it == vars_.end() ? nullptr : &it->second;
    }
    std::uint64_t get_u64(const std::string& name) const;
    const std::string& get_str(const std::string& name) const;

private:
    std::map<std::string, Value> vars_;
};

enum class Stage : std::uint8_t {
    unvisited,
    args_not_ready,
    prepared,
    submitted,
    completed,
    harvested,
    cancelled,
};

// Per-iteration incarnation of a syscall node: its computed arguments, the
// internal buffer read-like calls land in, and its completion once available.
struct NodeInstance {
    NodeRef node = kNoNode;
    EpochVector epoch;
    Stage stage = Stage::unvisited;
    ArgsResult args;
    // True while the computed args (and the buffer they point at) are bound
    // to a speculative execution; revoked if the instance is not prepared
    // after all, so dependent hooks never consume a buffer nobody will fill.
    bool args_valid = false;
    EntryId entry{0};
    std::unique_ptr<std::byte[]> buffer;
    std::size_t buffer_size = 0;
    SyscallCompletion completion;
    bool sync_executed = false;
    bool counted_in_flight = false;
    std::uint32_t hook_calls = 0;

    std::span<std::byte> buffer_span() { return {buffer.get(), buffer_size}; }
};

struct PrepareRecord {
    std::string node_id;
    EpochVector epoch;
    bool weak_path = false;  // sticky weak flag at prepare time
    Purity purity = Purity::pure;
};

struct SessionStats {
    std::uint64_t prepared = 0;
    std::uint64_t submitted = 0;
    std::uint64_t harvested = 0;
    std::uint64_t cancelled = 0;
    std::uint64_t sync_issued = 0;
    std::uint64_t max_in_flight = 0;
    std::vector<PrepareRecord> prepare_log;  // filled when log_prepares is set
};

struct SessionOptions {
    std::uint32_t depth = 0;      // 0 disables speculation
    bool verify_args = true;      // compare computed vs. actual arguments
    bool log_prepares = false;
    TraceRecorder* trace = nullptr;
};

// Live execution of one graph on one application thread. The application
// calls intercept() where it would issue the syscall; the session keeps the
// frontier aligned, runs the pre-issuing walk, and hands back the completion
// the synchronous call would have produced.
class Session {
public:
    Session(std::shared_ptr<const ForeactionGraph> graph, InputVarSet inputs,
            SessionOptions options, Executor& executor);
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    SyscallCompletion intercept(const SyscallRequest& actual);

    // Ends the session: cancels or drains outstanding speculation without
    // harvesting it, emits the app-return trace event, and returns counters.
    SessionStats finish(Digest output_digest = {});

    // Hook support: the allocated internal buffer of an instance (valid once
    // its arguments were computed), and its bytes once completed.
    std::span<const std::byte> instance_buffer(const std::string& node_id,
                                               const EpochVector& epoch);
    std::optional<std::span<const std::byte>> instance_bytes(const std::string& node_id,
                                                             const EpochVector& epoch);

    const InputVarSet& inputs() const { return inputs_; }
    const ForeactionGraph& graph() const { return *graph_; }
    std::uint32_t depth() const { return options_.depth; }
    const SessionStats& stats() const { return stats_; }
    std::uint64_t in_flight() const { return in_flight_; }

private:
    struct InstanceKey {
        NodeRef node;
        EpochVector epoch;
        bool operator==(const InstanceKey&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const InstanceKey& k) const {
            return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(k.node) << 32) ^
                                              k.epoch.hash());
        }
    };

    NodeInstance* find_instance(NodeRef node, const EpochVector& epoch);
    NodeInstance& instance(NodeRef node, const EpochVector& epoch);
    void apply_edge(EpochVector& epoch, const EdgeDef& edge) const;
    NodeInstance& resolve_frontier(const SyscallRequest& actual);
    std::size_t peek_and_prepare();
    void prepare_instance(NodeInstance& inst, bool weak_path);
    void mark_completed(NodeInstance& inst, SyscallCompletion c);
    SyscallCompletion execute_sync(const SyscallRequest& actual);
    void harvest(NodeInstance& inst, const SyscallRequest& actual, SyscallCompletion& c);

    std::shared_ptr<const ForeactionGraph> graph_;
    InputVarSet inputs_;
    SessionOptions options_;
    Executor& executor_;

    NodeRef last_node_;       // last executed node; start before any intercept
    EpochVector cur_epoch_;
    std::unordered_map<InstanceKey, std::unique_ptr<NodeInstance>, KeyHash> instances_;
    std::vector<NodeInstance*> pending_submit_;
    std::uint64_t in_flight_ = 0;
    SessionStats stats_;
    bool finished_ = false;
};

}  // namespace foreaction
