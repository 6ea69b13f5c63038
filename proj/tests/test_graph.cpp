#include <doctest.h>

#include "foreaction/common.hpp"
#include "foreaction/graph.hpp"

using namespace foreaction;

namespace {

ArgsResult dummy_args(const EpochVector&) {
    ArgsResult r;
    r.ready = true;
    r.args.type = SyscallType::fstat_at;
    r.args.path = "x";
    return r;
}

ChoiceResult exit_choice(const EpochVector&) {
    ChoiceResult c;
    c.ready = true;
    c.child = 0;
    return c;
}

// The metadata-loop shape: start -> fstat -> branch -> (loop back | end).
std::shared_ptr<ForeactionGraph> make_stat_shape() {
    auto g = std::make_shared<ForeactionGraph>("shape");
    NodeRef stat = g->add_syscall_node("stat", SyscallType::fstat_at, dummy_args, {});
    NodeRef br = g->add_branch_node("more", exit_choice);
    g->set_next(g->start(), stat);
    g->set_next(stat, br);
    g->branch_append_child(br, stat, true);
    g->branch_append_child(br, g->end());
    return g;
}

}  // namespace

TEST_CASE("adding syscall nodes sets purity from the catalog") {
    ForeactionGraph g("t");
    NodeRef stat = g.add_syscall_node("stat", SyscallType::fstat_at, dummy_args, {});
    CHECK(g.node(stat).purity == Purity::pure);
    NodeRef wr = g.add_syscall_node("wr", SyscallType::pwrite, dummy_args, {});
    CHECK(g.node(wr).purity == Purity::non_pure);
    CHECK(g.node_count() == 4);  // start + end + 2
}

TEST_CASE("duplicate node ids are rejected") {
    ForeactionGraph g("t");
    g.add_syscall_node("n", SyscallType::pread, dummy_args, {});
    CHECK_THROWS_AS(g.add_syscall_node("n", SyscallType::pread, dummy_args, {}),
                    GraphBuildError);
    CHECK_THROWS_AS(g.add_branch_node("n", exit_choice), GraphBuildError);
}

TEST_CASE("branch nodes start with no children and append in order") {
    ForeactionGraph g("t");
    NodeRef br = g.add_branch_node("b", exit_choice);
    CHECK(g.node(br).children.empty());
    NodeRef a = g.add_syscall_node("a", SyscallType::pread, dummy_args, {});
    g.branch_append_child(br, a);
    g.branch_append_child(br, g.end());
    CHECK(g.node(br).children.size() == 2);
    CHECK(g.node(br).children[0].to == a);
    CHECK(g.node(br).children[1].to == g.end());
}

TEST_CASE("set_next installs exactly one outgoing edge") {
    ForeactionGraph g("t");
    NodeRef a = g.add_syscall_node("a", SyscallType::pread, dummy_args, {});
    NodeRef b = g.add_syscall_node("b", SyscallType::pread, dummy_args, {});
    g.set_next(a, b, /*weak=*/true);
    CHECK(g.node(a).out->weak);
    CHECK_THROWS_AS(g.set_next(a, b), GraphBuildError);       // second edge
    CHECK_THROWS_AS(g.set_next(g.end(), a), GraphBuildError); // end has no successor
}

TEST_CASE("loop-back edges allocate distinct epoch slots") {
    ForeactionGraph g("t");
    NodeRef a = g.add_syscall_node("a", SyscallType::pread, dummy_args, {});
    NodeRef b1 = g.add_branch_node("b1", exit_choice);
    NodeRef b2 = g.add_branch_node("b2", exit_choice);
    g.branch_append_child(b1, a, true);
    g.branch_append_child(b2, a, true);  // shared loop head is allowed
    CHECK(g.node(b1).children[0].epoch_slot == 0);
    CHECK(g.node(b2).children[0].epoch_slot == 1);
    CHECK(g.epoch_width() == 2);
}

TEST_CASE("loop-back must target a prior node") {
    ForeactionGraph g("t");
    NodeRef br = g.add_branch_node("b", exit_choice);
    NodeRef later = g.add_syscall_node("later", SyscallType::pread, dummy_args, {});
    CHECK_THROWS_AS(g.branch_append_child(br, later, true), GraphBuildError);
    CHECK_THROWS_AS(g.branch_append_child(br, g.end(), true), GraphBuildError);
}

TEST_CASE("the stat-loop shape validates cleanly and freezes") {
    auto g = make_stat_shape();
    auto violations = g->validate();
    CHECK(violations.empty());
    CHECK(g->validated());
    CHECK_THROWS_AS(g->add_branch_node("late", exit_choice), GraphBuildError);
}

TEST_CASE("a floating second entry node is reported as a start violation") {
    auto g = std::make_shared<ForeactionGraph>("t");
    NodeRef a = g->add_syscall_node("a", SyscallType::pread, dummy_args, {});
    NodeRef b = g->add_syscall_node("b", SyscallType::pread, dummy_args, {});
    g->set_next(g->start(), a);
    g->set_next(a, g->end());
    g->set_next(b, g->end());  // b has no incoming edge
    auto violations = g->validate();
    REQUIRE_FALSE(violations.empty());
    bool saw = false;
    for (const auto& v : violations)
        if (v.kind == ViolationKind::multiple_start_nodes) saw = true;
    CHECK(saw);
    CHECK_FALSE(g->validated());
}

TEST_CASE("validate reports missing edges and unreachable nodes") {
    ForeactionGraph g("t");
    NodeRef a = g.add_syscall_node("a", SyscallType::pread, dummy_args, {});
    g.set_next(g.start(), a);
    // a has no outgoing edge; end unreachable.
    auto violations = g.validate();
    bool missing_out = false, end_unreachable = false;
    for (const auto& v : violations) {
        if (v.kind == ViolationKind::missing_outgoing_edge) missing_out = true;
        if (v.kind == ViolationKind::end_unreachable) end_unreachable = true;
    }
    CHECK(missing_out);
    CHECK(end_unreachable);
}

TEST_CASE("a forward cycle without loop-back marking is a violation") {
    ForeactionGraph g("t");
    NodeRef a = g.add_syscall_node("a", SyscallType::pread, dummy_args, {});
    NodeRef br = g.add_branch_node("b", exit_choice);
    g.set_next(g.start(), a);
    g.set_next(a, br);
    g.branch_append_child(br, a, /*loop_back=*/false);  // cycle, not marked
    g.branch_append_child(br, g.end());
    auto violations = g.validate();
    bool cycle = false;
    for (const auto& v : violations)
        if (v.kind == ViolationKind::cycle_without_loop_back) cycle = true;
    CHECK(cycle);
}

TEST_CASE("branch without children is a violation") {
    ForeactionGraph g("t");
    NodeRef br = g.add_branch_node("b", exit_choice);
    g.set_next(g.start(), br);
    auto violations = g.validate();
    bool saw = false;
    for (const auto& v : violations)
        if (v.kind == ViolationKind::branch_without_children) saw = true;
    CHECK(saw);
}

TEST_CASE("nested loop-back edges reset inner epoch slots") {
    // start -> a -> inner_branch -> (back to a | c -> outer_branch -> (back to a | end))
    // The outer loop strictly contains the inner loop span.
    ForeactionGraph g("t");
    NodeRef a = g.add_syscall_node("a", SyscallType::pread, dummy_args, {});
    NodeRef ib = g.add_branch_node("inner", exit_choice);
    NodeRef c = g.add_syscall_node("c", SyscallType::pread, dummy_args, {});
    NodeRef ob = g.add_branch_node("outer", exit_choice);
    g.set_next(g.start(), a);
    g.set_next(a, ib);
    g.branch_append_child(ib, a, true);   // slot 0 (inner)
    g.branch_append_child(ib, c);
    g.set_next(c, ob);
    g.branch_append_child(ob, a, true);   // slot 1 (outer)
    g.branch_append_child(ob, g.end());
    REQUIRE(g.validate().empty());
    CHECK(g.nested_slots(1) == std::vector<std::uint32_t>{0});
    CHECK(g.nested_slots(0).empty());
}

TEST_CASE("property: random valid builds validate, random mutations do not") {
    Rng rng(0xabcdULL);
    for (int round = 0; round < 60; ++round) {
        // A chain of loop segments is always valid by construction.
        ForeactionGraph g("p" + std::to_string(round));
        std::uint64_t segments = 1 + rng.below(4);
        NodeRef prev = g.start();
        std::vector<NodeRef> syscalls;
        for (std::uint64_t s = 0; s < segments; ++s) {
            NodeRef n = g.add_syscall_node("s" + std::to_string(s),
                                           rng.chance(1, 4) ? SyscallType::pwrite
                                                            : SyscallType::pread,
                                           dummy_args, {});
            syscalls.push_back(n);
            if (prev == g.start()) g.set_next(prev, n);
            else g.set_next(prev, n, rng.chance(1, 3));
            if (rng.chance(1, 2)) {
                NodeRef br = g.add_branch_node("b" + std::to_string(s), exit_choice);
                g.set_next(n, br);
                g.branch_append_child(br, syscalls[rng.below(syscalls.size())], true);
                NodeRef cont = g.add_syscall_node("c" + std::to_string(s),
                                                  SyscallType::pread, dummy_args, {});
                g.branch_append_child(br, cont);
                syscalls.push_back(cont);
                prev = cont;
            } else {
                prev = n;
            }
        }
        g.set_next(prev, g.end());
        CHECK(g.validate().empty());

        // Mutation: the same build with one structural defect.
        ForeactionGraph bad("bad" + std::to_string(round));
        NodeRef a = bad.add_syscall_node("a", SyscallType::pread, dummy_args, {});
        NodeRef orphan = bad.add_syscall_node("orphan", SyscallType::pread, dummy_args, {});
        bad.set_next(bad.start(), a);
        switch (rng.below(3)) {
            case 0:
                // a never reaches end, orphan floats
                break;
            case 1:
                bad.set_next(a, bad.end());
                bad.set_next(orphan, bad.end());  // still no incoming edge
                break;
            case 2: {
                NodeRef br = bad.add_branch_node("b", exit_choice);
                bad.set_next(a, br);
                bad.branch_append_child(br, a, false);  // unmarked cycle
                bad.branch_append_child(br, bad.end());
                bad.set_next(orphan, bad.end());
                break;
            }
        }
        CHECK_FALSE(bad.validate().empty());
    }
}

TEST_CASE("registry replaces definitions only when idle") {
    auto g1 = make_stat_shape();
    REQUIRE(g1->validate().empty());
    GraphRegistry::instance().register_graph(g1);
    CHECK(GraphRegistry::instance().find("shape") == g1);

    auto g2 = make_stat_shape();
    REQUIRE(g2->validate().empty());
    GraphRegistry::instance().register_graph(g2);  // idle: replacement allowed
    CHECK(GraphRegistry::instance().find("shape") == g2);
    GraphRegistry::instance().clear();
}
