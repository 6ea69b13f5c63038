#include "foreaction/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace foreaction {

std::string EpochVector::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < counters_.size(); ++i) {
        if (i) os << ',';
        os << counters_[i];
    }
    os << ')';
    return os.str();
}

ForeactionGraph::ForeactionGraph(std::string name) : name_(std::move(name)) {
    NodeDef s;
    s.kind = NodeKind::start;
    s.id = "@start";
    start_ = add_node(std::move(s));
    NodeDef e;
    e.kind = NodeKind::end;
    e.id = "@end";
    end_ = add_node(std::move(e));
}

NodeRef ForeactionGraph::add_node(NodeDef def) {
    nodes_.push_back(std::move(def));
    return static_cast<NodeRef>(nodes_.size() - 1);
}

void ForeactionGraph::require_mutable() const {
    if (validated_)
        throw GraphBuildError("graph '" + name_ + "' is frozen after validation");
}

NodeRef ForeactionGraph::find(const std::string& id) const {
    for (NodeRef i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].id == id) return i;
    return kNoNode;
}

NodeRef ForeactionGraph::add_syscall_node(const std::string& id, SyscallType type,
                                          ComputeArgsHook compute_args,
                                          SaveResultHook save_result) {
    require_mutable();
    if (find(id) != kNoNode) throw GraphBuildError("duplicate node id '" + id + "'");
    NodeDef n;
    n.kind = NodeKind::syscall;
    n.id = id;
    n.type = type;
    n.purity = classify(type);  // never independently settable
    n.compute_args = std::move(compute_args);
    n.save_result = std::move(save_result);
    return add_node(std::move(n));
}

NodeRef ForeactionGraph::add_branch_node(const std::string& id, ChoiceHook choice) {
    require_mutable();
    if (find(id) != kNoNode) throw GraphBuildError("duplicate node id '" + id + "'");
    NodeDef n;
    n.kind = NodeKind::branch;
    n.id = id;
    n.choice = std::move(choice);
    return add_node(std::move(n));
}

void ForeactionGraph::set_next(NodeRef node, NodeRef successor, bool weak) {
    require_mutable();
    if (node >= nodes_.size() || successor >= nodes_.size())
        throw GraphBuildError("set_next: bad node reference");
    NodeDef& n = nodes_[node];
    if (n.kind == NodeKind::end) throw GraphBuildError("set_next: end node has no successor");
    if (n.kind == NodeKind::branch)
        throw GraphBuildError("set_next: use branch_append_child for branch nodes");
    if (n.out.has_value())
        throw GraphBuildError("set_next: node '" + n.id + "' already has an outgoing edge");
    n.out = EdgeDef{node, successor, weak, false, kNoSlot};
}

void ForeactionGraph::branch_append_child(NodeRef branch, NodeRef child, bool loop_back) {
    require_mutable();
    if (branch >= nodes_.size() || child >= nodes_.size())
        throw GraphBuildError("branch_append_child: bad node reference");
    NodeDef& b = nodes_[branch];
    if (b.kind != NodeKind::branch)
        throw GraphBuildError("branch_append_child: not a branch node");
    EdgeDef e{branch, child, false, loop_back, kNoSlot};
    if (loop_back) {
        // A loop-back edge must target a node defined before the branch.
        const NodeDef& c = nodes_[child];
        if (child >= branch || (c.kind != NodeKind::syscall && c.kind != NodeKind::branch))
            throw GraphBuildError("loop_back edge must target a prior syscall or branch node");
        e.epoch_slot = loop_slot_count_++;
        loop_spans_.push_back({child, branch});
    }
    b.children.push_back(e);
}

bool ForeactionGraph::forward_reaches(NodeRef from, NodeRef to) const {
    std::vector<bool> seen(nodes_.size(), false);
    std::deque<NodeRef> q{from};
    seen[from] = true;
    while (!q.empty()) {
        NodeRef cur = q.front();
        q.pop_front();
        if (cur == to) return true;
        const NodeDef& n = nodes_[cur];
        auto push = [&](NodeRef next) {
            if (next < nodes_.size() && !seen[next]) {
                seen[next] = true;
                q.push_back(next);
            }
        };
        if (n.out) push(n.out->to);
        for (const auto& c : n.children)
            if (!c.loop_back) push(c.to);
    }
    return false;
}

std::vector<Violation> ForeactionGraph::validate() {
    std::vector<Violation> out;
    auto flag = [&](ViolationKind k, std::string msg) {
        out.push_back(Violation{k, std::move(msg)});
    };

    std::vector<std::size_t> incoming(nodes_.size(), 0);
    for (const auto& n : nodes_) {
        if (n.out) ++incoming[n.out->to];
        for (const auto& c : n.children) ++incoming[c.to];
    }

    for (NodeRef i = 0; i < nodes_.size(); ++i) {
        const NodeDef& n = nodes_[i];
        switch (n.kind) {
            case NodeKind::start:
                if (incoming[i] != 0)
                    flag(ViolationKind::multiple_start_nodes,
                         "start node has incoming edges");
                if (!n.out)
                    flag(ViolationKind::missing_outgoing_edge,
                         "start node has no outgoing edge");
                break;
            case NodeKind::end:
                if (incoming[i] == 0)
                    flag(ViolationKind::end_unreachable, "end node has no incoming edge");
                break;
            case NodeKind::syscall:
                if (incoming[i] == 0)
                    flag(ViolationKind::multiple_start_nodes,
                         "multiple start nodes: syscall node '" + n.id +
                             "' has no incoming edge");
                if (!n.out)
                    flag(ViolationKind::missing_outgoing_edge,
                         "syscall node '" + n.id + "' has no outgoing edge");
                break;
            case NodeKind::branch:
                if (incoming[i] == 0)
                    flag(ViolationKind::multiple_start_nodes,
                         "multiple start nodes: branch node '" + n.id +
                             "' has no incoming edge");
                if (n.children.empty())
                    flag(ViolationKind::branch_without_children,
                         "branch node '" + n.id + "' has no children");
                break;
        }
    }

    // With loop-back edges removed the graph must be a DAG; Kahn's algorithm.
    {
        std::vector<std::size_t> deg(nodes_.size(), 0);
        for (const auto& n : nodes_) {
            if (n.out) ++deg[n.out->to];
            for (const auto& c : n.children)
                if (!c.loop_back) ++deg[c.to];
        }
        std::deque<NodeRef> q;
        for (NodeRef i = 0; i < nodes_.size(); ++i)
            if (deg[i] == 0) q.push_back(i);
        std::size_t seen = 0;
        while (!q.empty()) {
            NodeRef cur = q.front();
            q.pop_front();
            ++seen;
            const NodeDef& n = nodes_[cur];
            auto relax = [&](NodeRef next) {
                if (--deg[next] == 0) q.push_back(next);
            };
            if (n.out) relax(n.out->to);
            for (const auto& c : n.children)
                if (!c.loop_back) relax(c.to);
        }
        if (seen != nodes_.size())
            flag(ViolationKind::cycle_without_loop_back,
                 "graph contains a cycle not marked as loop-back");
    }

    for (NodeRef i = 0; i < nodes_.size(); ++i) {
        if (i == start_) continue;
        if (!forward_reaches(start_, i))
            flag(ViolationKind::unreachable_from_start,
                 "node '" + nodes_[i].id + "' unreachable from start");
        if (i != end_ && !forward_reaches(i, end_))
            flag(ViolationKind::end_unreachable,
                 "end unreachable from node '" + nodes_[i].id + "'");
    }

    // Loop-back targets must be ancestors of their branch on forward edges.
    for (const auto& n : nodes_) {
        for (const auto& c : n.children) {
            if (!c.loop_back) continue;
            if (!forward_reaches(c.to, c.from))
                flag(ViolationKind::loop_back_not_prior,
                     "loop-back from '" + nodes_[c.from].id + "' targets non-prior node '" +
                         nodes_[c.to].id + "'");
        }
    }

    if (!out.empty()) return out;

    // Freeze: compute which loops nest inside which, for epoch resets.
    nested_slots_.assign(loop_slot_count_, {});
    for (std::uint32_t outer = 0; outer < loop_slot_count_; ++outer) {
        auto [oh, ob] = loop_spans_[outer];
        for (std::uint32_t inner = 0; inner < loop_slot_count_; ++inner) {
            if (inner == outer) continue;
            auto [ih, ib] = loop_spans_[inner];
            bool contained = (forward_reaches(oh, ih) && forward_reaches(ib, ob));
            bool identical = (ih == oh && ib == ob);
            if (contained && !identical) nested_slots_[outer].push_back(inner);
        }
    }
    validated_ = true;
    return out;
}

GraphRegistry& GraphRegistry::instance() {
    static GraphRegistry reg;
    return reg;
}

void GraphRegistry::register_graph(std::shared_ptr<ForeactionGraph> graph) {
    if (!graph) throw GraphBuildError("register_graph: null graph");
    std::lock_guard lk(mu_);
    auto it = graphs_.find(graph->name());
    if (it != graphs_.end() &&
        it->second->active_sessions_.load(std::memory_order_acquire) > 0) {
        throw GraphBuildError("graph '" + graph->name() +
                              "' has active sessions and cannot be replaced");
    }
    graphs_[graph->name()] = std::move(graph);
}

std::shared_ptr<ForeactionGraph> GraphRegistry::find(const std::string& name) const {
    std::lock_guard lk(mu_);
    auto it = graphs_.find(name);
    return it == graphs_.end() ? nullptr : it->second;
}

void GraphRegistry::clear() {
    std::lock_guard lk(mu_);
    graphs_.clear();
}

}  // namespace foreaction
