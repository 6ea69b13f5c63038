#include "foreaction/trace.hpp"

#include <algorithm>
#include <sstream>

namespace foreaction {

const char* to_string(TraceKind k) {
    switch (k) {
        case TraceKind::non_pure_exec: return "non-pure-exec";
        case TraceKind::harvest: return "harvest";
        case TraceKind::app_return: return "app-return";
    }
    return "?";
}

std::string TraceEvent::to_line() const {
    std::ostringstream os;
    os << seq << ' ' << to_string(kind) << ' ' << foreaction::to_string(type) << ' '
       << submit_seq << ' ' << to_hex(args) << ' ' << to_hex(payload) << ' ' << time;
    return os.str();
}

std::optional<TraceEvent> TraceEvent::from_line(const std::string& line) {
    std::istringstream is(line);
    TraceEvent ev;
    std::string kind_s, type_s, args_s, payload_s;
    if (!(is >> ev.seq >> kind_s >> type_s >> ev.submit_seq >> args_s >> payload_s >> ev.time))
        return std::nullopt;
    if (kind_s == "non-pure-exec") ev.kind = TraceKind::non_pure_exec;
    else if (kind_s == "harvest") ev.kind = TraceKind::harvest;
    else if (kind_s == "app-return") ev.kind = TraceKind::app_return;
    else return std::nullopt;
    auto t = syscall_type_from_string(type_s);
    if (!t) return std::nullopt;
    ev.type = *t;
    if (!parse_hex_digest(args_s, ev.args) || !parse_hex_digest(payload_s, ev.payload))
        return std::nullopt;
    return ev;
}

std::string serialize_trace(const Trace& t) {
    std::string out;
    for (const auto& ev : t) {
        out += ev.to_line();
        out += '\n';
    }
    return out;
}

Trace parse_trace(const std::string& text) {
    Trace t;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto ev = TraceEvent::from_line(line);
        if (!ev) throw std::runtime_error("bad trace line: " + line);
        t.push_back(*ev);
    }
    return t;
}

namespace {

// Independent non-pure entries may execute in any relative order, both here
// and on a kernel ring, so the comparable sequence is canonical: sorted by
// content. Order-sensitive effects (overlapping writes) still diverge through
// the final store digest.
std::vector<TraceEvent> non_pure_canonical(const Trace& t) {
    std::vector<TraceEvent> out;
    for (const auto& ev : t)
        if (ev.kind == TraceKind::non_pure_exec) out.push_back(ev);
    std::stable_sort(out.begin(), out.end(), [](const TraceEvent& a, const TraceEvent& b) {
        if (a.type != b.type) return a.type < b.type;
        if (a.args.value != b.args.value) return a.args.value < b.args.value;
        return a.payload.value < b.payload.value;
    });
    return out;
}

std::string describe(const TraceEvent& ev) {
    return std::string(to_string(ev.type)) + " args=" + to_hex(ev.args) +
           " payload=" + to_hex(ev.payload);
}

}  // namespace

SynchronyVerdict check_equivalence(const RunArtifacts& reference, const RunArtifacts& speculative) {
    SynchronyVerdict v;
    auto ref = non_pure_canonical(reference.trace);
    auto spec = non_pure_canonical(speculative.trace);
    std::size_t n = std::min(ref.size(), spec.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (ref[i].type != spec[i].type || !(ref[i].args == spec[i].args) ||
            !(ref[i].payload == spec[i].payload)) {
            v.equivalent = false;
            v.divergence_index = i;
            v.expected = describe(ref[i]);
            v.actual = describe(spec[i]);
            return v;
        }
    }
    if (ref.size() != spec.size()) {
        v.equivalent = false;
        v.divergence_index = n;
        v.expected = ref.size() > n ? describe(ref[n]) : "<no further non-pure events>";
        v.actual = spec.size() > n ? describe(spec[n]) : "<no further non-pure events>";
        return v;
    }
    if (!(reference.output == speculative.output)) {
        v.equivalent = false;
        v.divergence_index = ref.size();
        v.expected = "output digest " + to_hex(reference.output);
        v.actual = "output digest " + to_hex(speculative.output);
        return v;
    }
    if (!(reference.store == speculative.store)) {
        v.equivalent = false;
        v.divergence_index = ref.size();
        v.expected = "store digest " + to_hex(reference.store);
        v.actual = "store digest " + to_hex(speculative.store);
        return v;
    }
    return v;
}

}  // namespace foreaction
