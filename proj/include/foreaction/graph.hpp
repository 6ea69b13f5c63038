#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "foreaction/syscall.hpp"

namespace foreaction {

struct GraphBuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using NodeRef = std::uint32_t;
inline constexpr NodeRef kNoNode = 0xffffffffu;
inline constexpr std::uint32_t kNoSlot = 0xffffffffu;

enum class NodeKind : std::uint8_t { start, end, syscall, branch };

// One per-loop-back-edge traversal counter; identifies which iteration a
// node instance belongs to.
class EpochVector {
public:
    EpochVector() = default;
    explicit EpochVector(std::size_t width) : counters_(width, 0) {}

    std::uint32_t operator[](std::size_t slot) const { return counters_[slot]; }
    std::size_t width() const { return counters_.size(); }
    void bump(std::size_t slot) { ++counters_[slot]; }
    void reset(std::size_t slot) { counters_[slot] = 0; }

    std::string to_string() const;
    std::uint64_t hash() const {
        Digest d;
        for (auto c : counters_) d.mix_u64(c);
        return d.value;
    }
    friend bool operator==(const EpochVector&, const EpochVector&) = default;

private:
    std::vector<std::uint32_t> counters_;
};

struct EdgeDef {
    NodeRef from = kNoNode;
    NodeRef to = kNoNode;
    bool weak = false;
    bool loop_back = false;
    std::uint32_t epoch_slot = kNoSlot;  // present iff loop_back
};

// Hook outcomes. Hooks are opaque callables supplied by plugin code; the
// engine only ever looks at these outputs.
struct ArgsResult {
    bool ready = false;
    bool link = false;
    SyscallRequest args;
};
struct ChoiceResult {
    bool ready = false;
    std::size_t child = 0;
};

using ComputeArgsHook = std::function<ArgsResult(const EpochVector&)>;
using SaveResultHook =
    std::function<void(const EpochVector&, std::int64_t, const CompletionPayload&)>;
using ChoiceHook = std::function<ChoiceResult(const EpochVector&)>;

struct NodeDef {
    NodeKind kind = NodeKind::syscall;
    std::string id;
    SyscallType type = SyscallType::pread;
    Purity purity = Purity::pure;  // always the catalog classification of type
    ComputeArgsHook compute_args;
    SaveResultHook save_result;
    ChoiceHook choice;
    std::optional<EdgeDef> out;    // start and syscall nodes
    std::vector<EdgeDef> children; // branch nodes
};

enum class ViolationKind : std::uint8_t {
    multiple_start_nodes,
    missing_outgoing_edge,
    missing_incoming_edge,
    end_unreachable,
    unreachable_from_start,
    cycle_without_loop_back,
    loop_back_not_prior,
    branch_without_children,
};

struct Violation {
    ViolationKind kind;
    std::string message;
};

// Directed graph of syscall and branch nodes between one start and one end,
// a DAG once loop-back edges are removed. Built by plugin code through the
// add/set/append calls, then frozen by a clean validate().
class ForeactionGraph {
public:
    explicit ForeactionGraph(std::string name);

    const std::string& name() const { return name_; }
    NodeRef start() const { return start_; }
    NodeRef end() const { return end_; }

    NodeRef add_syscall_node(const std::string& id, SyscallType type,
                             ComputeArgsHook compute_args, SaveResultHook save_result);
    NodeRef add_branch_node(const std::string& id, ChoiceHook choice);
    void set_next(NodeRef node, NodeRef successor, bool weak = false);
    void branch_append_child(NodeRef branch, NodeRef child, bool loop_back = false);

    // Reports every violated structural invariant; an empty report marks the
    // graph validated and freezes it.
    std::vector<Violation> validate();
    bool validated() const { return validated_; }

    const NodeDef& node(NodeRef ref) const { return nodes_[ref]; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t epoch_width() const { return loop_slot_count_; }
    NodeRef find(const std::string& id) const;

    // Slots of loop-back edges strictly nested inside the given slot's loop;
    // traversing the outer loop resets these.
    const std::vector<std::uint32_t>& nested_slots(std::uint32_t slot) const {
        return nested_slots_[slot];
    }

private:
    friend class Session;
    friend class GraphRegistry;

    NodeRef add_node(NodeDef def);
    void require_mutable() const;
    bool forward_reaches(NodeRef from, NodeRef to) const;  // loop-backs ignored

    std::string name_;
    std::vector<NodeDef> nodes_;
    NodeRef start_;
    NodeRef end_;
    std::uint32_t loop_slot_count_ = 0;
    std::vector<std::pair<NodeRef, NodeRef>> loop_spans_;  // slot -> (head, branch)
    std::vector<std::vector<std::uint32_t>> nested_slots_;
    bool validated_ = false;
    mutable std::atomic<std::int32_t> active_sessions_{0};
};

// Process-wide registry of graph definitions, keyed by name. Re-registering
// replaces the definition only while no session runs on the old one.
class GraphRegistry {
public:
    static GraphRegistry& instance();

    void register_graph(std::shared_ptr<ForeactionGraph> graph);
    std::shared_ptr<ForeactionGraph> find(const std::string& name) const;
    void clear();

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<ForeactionGraph>> graphs_;
};

}  // namespace foreaction
