#include "foreaction/engine.hpp"

#include <algorithm>
#include <cstring>
#include <set>

namespace foreaction {

namespace {

thread_local std::set<const ForeactionGraph*> t_active_graphs;

std::span<const std::byte> completion_bytes(const NodeInstance& inst) {
    if (!inst.buffer || inst.completion.rc <= 0) return {};
    std::uint64_t n = std::min<std::uint64_t>(static_cast<std::uint64_t>(inst.completion.rc),
                                              inst.buffer_size);
    return {inst.buffer.get(), static_cast<std::size_t>(n)};
}

}  // namespace

std::uint64_t InputVarSet::get_u64(const std::string& name) const {
    const Value* v = get(name);
    if (!v) throw SessionStateError("input variable '" + name + "' missing");
    if (const auto* u = std::get_if<std::uint64_t>(v)) return *u;
    if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<std::uint64_t>(*i);
    throw SessionStateError("input variable '" + name + "' is not numeric");
}

const std::string& InputVarSet::get_str(const std::string& name) const {
    const Value* v = get(name);
    if (!v || !std::holds_alternative<std::string>(*v))
        throw SessionStateError("input variable '" + name + "' is not a string");
    return std::get<std::string>(*v);
}

Session::Session(std::shared_ptr<const ForeactionGraph> graph, InputVarSet inputs,
                 SessionOptions options, Executor& executor)
    : graph_(std::move(graph)),
      inputs_(std::move(inputs)),
      options_(options),
      executor_(executor) {
    if (!graph_ || !graph_->validated())
        throw SessionStateError("session requires a validated graph");
    if (t_active_graphs.count(graph_.get()) > 0)
        throw SessionStateError("a session for graph '" + graph_->name() +
                                "' is already active on this thread");
    t_active_graphs.insert(graph_.get());
    graph_->active_sessions_.fetch_add(1, std::memory_order_acq_rel);
    last_node_ = graph_->start();
    cur_epoch_ = EpochVector(graph_->epoch_width());
    executor_.set_trace(options_.trace);
}

Session::~Session() {
    if (!finished_) {
        executor_.cancel_outstanding();
        t_active_graphs.erase(graph_.get());
        graph_->active_sessions_.fetch_sub(1, std::memory_order_acq_rel);
    }
}

NodeInstance* Session::find_instance(NodeRef node, const EpochVector& epoch) {
    auto it = instances_.find(InstanceKey{node, epoch});
    return it == instances_.end() ? nullptr : it->second.get();
}

NodeInstance& Session::instance(NodeRef node, const EpochVector& epoch) {
    InstanceKey key{node, epoch};
    auto it = instances_.find(key);
    if (it == instances_.end()) {
        auto inst = std::make_unique<NodeInstance>();
        inst->node = node;
        inst->epoch = epoch;
        it = instances_.emplace(std::move(key), std::move(inst)).first;
    }
    return *it->second;
}

void Session::apply_edge(EpochVector& epoch, const EdgeDef& edge) const {
    if (!edge.loop_back) return;
    epoch.bump(edge.epoch_slot);
    for (std::uint32_t inner : graph_->nested_slots(edge.epoch_slot)) epoch.reset(inner);
}

NodeInstance& Session::resolve_frontier(const SyscallRequest& actual) {
    const NodeDef& last = graph_->node(last_node_);
    if (!last.out)
        throw SessionStateError("frontier node '" + last.id + "' has no successor");
    EpochVector epoch = cur_epoch_;
    NodeRef cur = last.out->to;
    while (graph_->node(cur).kind == NodeKind::branch) {
        const NodeDef& b = graph_->node(cur);
        ChoiceResult ch = b.choice(epoch);
        if (!ch.ready)
            throw ChoiceNotReadyError("branch '" + b.id +
                                      "' choice not ready at frontier resolution");
        if (ch.child >= b.children.size())
            throw ChoiceNotReadyError("branch '" + b.id + "' chose out-of-range child");
        const EdgeDef& edge = b.children[ch.child];
        apply_edge(epoch, edge);
        cur = edge.to;
    }
    if (cur == graph_->end())
        throw GraphMismatchError("application issued " + std::string(to_string(actual.type)) +
                                 " but the graph reached its end node");
    NodeInstance& inst = instance(cur, epoch);
    const NodeDef& def = graph_->node(cur);
    if (def.type != actual.type)
        throw GraphMismatchError("graph expects " + std::string(to_string(def.type)) +
                                 " at node '" + def.id + "' but application issued " +
                                 to_string(actual.type));
    cur_epoch_ = epoch;
    return inst;
}

void Session::prepare_instance(NodeInstance& inst, bool weak_path) {
    inst.entry = executor_.prepare(inst.args.args, inst.args.link);
    inst.stage = Stage::prepared;
    inst.counted_in_flight = true;
    pending_submit_.push_back(&inst);
    ++stats_.prepared;
    ++in_flight_;
    stats_.max_in_flight = std::max(stats_.max_in_flight, in_flight_);
    if (options_.log_prepares) {
        stats_.prepare_log.push_back(PrepareRecord{graph_->node(inst.node).id, inst.epoch,
                                                   weak_path, classify(inst.args.args)});
    }
}

std::size_t Session::peek_and_prepare() {
    std::size_t prepared_before = pending_submit_.size();
    const NodeDef& frontier = graph_->node(last_node_);
    if (!frontier.out) return 0;

    EpochVector epoch = cur_epoch_;
    const EdgeDef* edge = &*frontier.out;
    bool weak = false;
    // Linked entries are prepared only together with their chain successor,
    // so a chain never dangles across walks. Each member remembers the sticky
    // weak flag at its own position on the path.
    std::vector<std::pair<NodeInstance*, bool>> link_group;

    auto abandon_group = [&] {
        for (auto& [m, w] : link_group) {
            m->stage = Stage::args_not_ready;
            m->args_valid = false;
        }
        link_group.clear();
    };

    std::uint32_t budget = options_.depth;
    while (budget-- > 0) {
        if (edge->weak) weak = true;
        NodeRef cur = edge->to;
        bool choice_blocked = false;
        while (graph_->node(cur).kind == NodeKind::branch) {
            const NodeDef& b = graph_->node(cur);
            ChoiceResult ch = b.choice(epoch);
            if (!ch.ready || ch.child >= b.children.size()) {
                choice_blocked = true;
                break;
            }
            const EdgeDef& child = b.children[ch.child];
            apply_edge(epoch, child);
            cur = child.to;
        }
        if (choice_blocked || cur == graph_->end()) break;

        const NodeDef& def = graph_->node(cur);
        NodeInstance& inst = instance(cur, epoch);
        if (inst.stage == Stage::unvisited || inst.stage == Stage::args_not_ready) {
            ArgsResult res = def.compute_args ? def.compute_args(epoch) : ArgsResult{};
            if (!res.ready) {
                inst.stage = Stage::args_not_ready;
                abandon_group();
            } else {
                inst.args = std::move(res);
                // Read destinations live in the instance so results survive
                // until the application reaches this call.
                if (inst.args.args.type == SyscallType::pread) {
                    std::size_t need = static_cast<std::size_t>(inst.args.args.length);
                    if (!inst.buffer || inst.buffer_size != need) {
                        inst.buffer = std::make_unique<std::byte[]>(need);
                        inst.buffer_size = need;
                    }
                    inst.args.args.dest = inst.buffer_span();
                }
                inst.args_valid = true;
                bool blocked = weak && classify(inst.args.args) == Purity::non_pure;
                if (blocked) {
                    inst.stage = Stage::args_not_ready;
                    inst.args_valid = false;
                    abandon_group();
                } else if (inst.args.link) {
                    link_group.emplace_back(&inst, weak);
                } else {
                    for (auto& [m, w] : link_group) prepare_instance(*m, w);
                    link_group.clear();
                    prepare_instance(inst, weak);
                }
            }
        } else if (!link_group.empty()) {
            // Successor already handled earlier; the group cannot chain onto it.
            abandon_group();
        }

        const NodeDef& cur_def = graph_->node(cur);
        if (!cur_def.out) break;
        edge = &*cur_def.out;
    }
    abandon_group();
    return pending_submit_.size() - prepared_before;
}

void Session::mark_completed(NodeInstance& inst, SyscallCompletion c) {
    if (inst.counted_in_flight) {
        inst.counted_in_flight = false;
        if (in_flight_ > 0) --in_flight_;
    }
    inst.completion = std::move(c);
    inst.stage = Stage::completed;
}

SyscallCompletion Session::execute_sync(const SyscallRequest& actual) {
    EntryId id = executor_.prepare(actual, false);
    executor_.submit_all_prepared();
    ++stats_.sync_issued;
    return executor_.wait_completion(id);
}

void Session::harvest(NodeInstance& inst, const SyscallRequest& actual, SyscallCompletion& c) {
    if (inst.stage == Stage::harvested)
        throw SessionStateError("double harvest of node '" + graph_->node(inst.node).id + "'");
    // Copy speculative read results back to the application's destination.
    if (inst.buffer && c.rc > 0 && !actual.dest.empty()) {
        std::size_t n = std::min<std::size_t>(
            {static_cast<std::size_t>(c.rc), actual.dest.size(), inst.buffer_size});
        std::memcpy(actual.dest.data(), inst.buffer.get(), n);
    }
    const NodeDef& def = graph_->node(inst.node);
    if (def.save_result) def.save_result(inst.epoch, c.rc, c.payload);
    ++inst.hook_calls;
    inst.stage = Stage::harvested;
    ++stats_.harvested;
    if (options_.trace) {
        options_.trace->record(TraceKind::harvest, actual.type, inst.entry.value,
                               request_digest(actual), payload_digest(c, completion_bytes(inst)),
                               executor_.now());
    }
}

SyscallCompletion Session::intercept(const SyscallRequest& actual) {
    if (finished_) throw SessionStateError("intercept on a finished session");

    NodeInstance& inst = resolve_frontier(actual);
    last_node_ = inst.node;
    cur_epoch_ = inst.epoch;
    // The depth budget bounds speculation ahead of the running call; once the
    // application reaches an instance it no longer counts against it.
    if (inst.counted_in_flight) {
        inst.counted_in_flight = false;
        if (in_flight_ > 0) --in_flight_;
    }

    peek_and_prepare();
    std::size_t submitted = executor_.submit_all_prepared();
    stats_.submitted += submitted;
    for (NodeInstance* p : pending_submit_)
        if (p->stage == Stage::prepared) p->stage = Stage::submitted;
    pending_submit_.clear();

    SyscallCompletion result;
    if (inst.stage == Stage::unvisited || inst.stage == Stage::args_not_ready) {
        // Never speculated: run the application's own call. Its internal
        // buffer (if any) stays unfilled, so unbind it from dependent hooks.
        result = execute_sync(actual);
        inst.sync_executed = true;
        inst.args_valid = false;
        inst.stage = Stage::harvested;
        if (options_.trace) {
            std::span<const std::byte> bytes;
            if (result.rc > 0 && !actual.dest.empty())
                bytes = {actual.dest.data(),
                         std::min<std::size_t>(static_cast<std::size_t>(result.rc),
                                               actual.dest.size())};
            options_.trace->record(TraceKind::harvest, actual.type, 0,
                                   request_digest(actual), payload_digest(result, bytes),
                                   executor_.now());
        }
    } else {
        SyscallCompletion c = executor_.wait_completion(inst.entry);
        mark_completed(inst, std::move(c));
        if (inst.completion.cancelled()) {
            // Chain severed under this entry; fall back to the real call.
            inst.stage = Stage::cancelled;
            result = execute_sync(actual);
        } else {
            if (options_.verify_args) {
                Digest expect = request_digest(inst.args.args);
                Digest got = request_digest(actual);
                if (!(expect == got))
                    throw ArgsMismatchError("computed arguments for node '" +
                                            graph_->node(inst.node).id + "' epoch " +
                                            inst.epoch.to_string() +
                                            " differ from the application's call");
            }
            result = inst.completion;
            harvest(inst, actual, result);
        }
    }
    return result;
}

std::span<const std::byte> Session::instance_buffer(const std::string& node_id,
                                                    const EpochVector& epoch) {
    NodeRef ref = graph_->find(node_id);
    if (ref == kNoNode) return {};
    NodeInstance* inst = find_instance(ref, epoch);
    if (!inst || !inst->buffer || !inst->args_valid) return {};
    return {inst->buffer.get(), inst->buffer_size};
}

std::optional<std::span<const std::byte>> Session::instance_bytes(const std::string& node_id,
                                                                  const EpochVector& epoch) {
    NodeRef ref = graph_->find(node_id);
    if (ref == kNoNode) return std::nullopt;
    NodeInstance* inst = find_instance(ref, epoch);
    if (!inst) return std::nullopt;
    if (inst->stage == Stage::submitted) {
        if (auto c = executor_.try_peek(inst->entry)) mark_completed(*inst, std::move(*c));
    }
    if (inst->stage != Stage::completed && inst->stage != Stage::harvested)
        return std::nullopt;
    if (!inst->args_valid || inst->completion.rc < 0 || inst->completion.cancelled())
        return std::nullopt;
    return completion_bytes(*inst);
}

SessionStats Session::finish(Digest output_digest) {
    if (finished_) throw SessionStateError("session already finished");

    // Outstanding speculation is discarded, never harvested. A non-pure entry
    // still outstanding here means the graph let a side effect escape past an
    // early exit; surface that loudly.
    std::string phantom;
    for (auto& [key, inst] : instances_) {
        if (inst->stage == Stage::prepared || inst->stage == Stage::submitted) {
            if (classify(inst->args.args) == Purity::non_pure && phantom.empty())
                phantom = graph_->node(inst->node).id;
            inst->stage = Stage::cancelled;
        }
    }
    CancelResult cr = executor_.cancel_outstanding();
    stats_.cancelled += cr.total();
    in_flight_ = 0;

    if (options_.trace)
        options_.trace->record(TraceKind::app_return, SyscallType::open_at, 0, output_digest,
                               Digest{}, executor_.now());

    finished_ = true;
    t_active_graphs.erase(graph_.get());
    graph_->active_sessions_.fetch_sub(1, std::memory_order_acq_rel);

    if (!phantom.empty())
        throw EngineError("non-pure speculative entry for node '" + phantom +
                          "' was still outstanding at exit");
    return stats_;
}

}  // namespace foreaction
