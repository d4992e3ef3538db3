#ifndef PIL_CHOREOGRAPHY_HPP
#define PIL_CHOREOGRAPHY_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pil/process.hpp"

namespace pil {

struct Chor;
using ChorPtr = std::shared_ptr<const Chor>;

// Choreographies: end, point-to-point communication, label choice with
// garbage branches, and restriction. Garbage branches carry sequential
// processes for the labels the receiver accepts but the selector never picks.
struct Chor {
    enum class Kind { End, Com, Choice, Res };

    Kind kind = Kind::End;
    std::string from, to;  // process names (Com/Choice)
    std::string value;     // sent name (Com)
    std::string binder;    // receive binder (Com)
    std::string channel;   // Com/Choice channel, Res binder
    ChorPtr cont;          // Com continuation, Res body
    std::vector<std::pair<std::string, ChorPtr>> selectable;      // Choice, labels in L
    std::vector<std::pair<std::string, ProcessPtr>> garbage;      // Choice, labels in L' \ L
};

inline ChorPtr chor_end() {
    static const ChorPtr e = std::make_shared<Chor>();
    return e;
}

inline ChorPtr chor_com(std::string p, std::string x, std::string q, std::string y,
                        std::string k, ChorPtr cont) {
    if (p == q) throw std::invalid_argument("communication requires distinct process names");
    auto c = std::make_shared<Chor>();
    c->kind = Chor::Kind::Com;
    c->from = std::move(p);
    c->value = std::move(x);
    c->to = std::move(q);
    c->binder = std::move(y);
    c->channel = std::move(k);
    c->cont = std::move(cont);
    return c;
}

inline ChorPtr chor_choice(std::string p, std::string q, std::string k,
                           std::vector<std::pair<std::string, ChorPtr>> selectable,
                           std::vector<std::pair<std::string, ProcessPtr>> garbage) {
    if (p == q) throw std::invalid_argument("choice requires distinct process names");
    if (selectable.empty()) throw std::invalid_argument("choice needs a selectable branch");
    auto c = std::make_shared<Chor>();
    c->kind = Chor::Kind::Choice;
    c->from = std::move(p);
    c->to = std::move(q);
    c->channel = std::move(k);
    c->selectable = std::move(selectable);
    c->garbage = std::move(garbage);
    return c;
}

inline ChorPtr chor_res(std::string x, ChorPtr body) {
    auto c = std::make_shared<Chor>();
    c->kind = Chor::Kind::Res;
    c->channel = std::move(x);
    c->cont = std::move(body);
    return c;
}

inline bool equal(const ChorPtr& a, const ChorPtr& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Chor::Kind::End: return true;
        case Chor::Kind::Com:
            return a->from == b->from && a->value == b->value && a->to == b->to &&
                   a->binder == b->binder && a->channel == b->channel && equal(a->cont, b->cont);
        case Chor::Kind::Res: return a->channel == b->channel && equal(a->cont, b->cont);
        case Chor::Kind::Choice: {
            if (a->from != b->from || a->to != b->to || a->channel != b->channel) return false;
            if (a->selectable.size() != b->selectable.size() || a->garbage.size() != b->garbage.size())
                return false;
            for (std::size_t i = 0; i < a->selectable.size(); ++i) {
                if (a->selectable[i].first != b->selectable[i].first) return false;
                if (!equal(a->selectable[i].second, b->selectable[i].second)) return false;
            }
            for (std::size_t i = 0; i < a->garbage.size(); ++i) {
                if (a->garbage[i].first != b->garbage[i].first) return false;
                if (!equal(a->garbage[i].second, b->garbage[i].second)) return false;
            }
            return true;
        }
    }
    return false;
}

inline std::set<std::string> process_names(const ChorPtr& c) {
    std::set<std::string> out;
    struct Impl {
        std::set<std::string>& out;
        void go(const ChorPtr& c) {
            switch (c->kind) {
                case Chor::Kind::End: return;
                case Chor::Kind::Com: out.insert(c->from); out.insert(c->to); go(c->cont); return;
                case Chor::Kind::Res: go(c->cont); return;
                case Chor::Kind::Choice:
                    out.insert(c->from);
                    out.insert(c->to);
                    for (auto& [l, b] : c->selectable) go(b);
                    return;
            }
        }
    };
    Impl{out}.go(c);
    return out;
}

inline bool is_flat(const ChorPtr& c) {
    ChorPtr body = c;
    while (body->kind == Chor::Kind::Res) body = body->cont;
    struct NoRes {
        bool ok = true;
        void go(const ChorPtr& c) {
            switch (c->kind) {
                case Chor::Kind::Res: ok = false; return;
                case Chor::Kind::Com: go(c->cont); return;
                case Chor::Kind::Choice:
                    for (auto& [l, b] : c->selectable) go(b);
                    return;
                case Chor::Kind::End: return;
            }
        }
    };
    NoRes nr;
    nr.go(body);
    return nr.ok;
}

// C{x/y}: substitute the sent name for the binder. Restriction and
// communication binders shadow; garbage processes are substituted as terms.
inline ChorPtr chor_subst(const ChorPtr& c, const std::string& x, const std::string& y) {
    if (x == y) return c;
    auto sub = [&](const std::string& n) { return n == y ? x : n; };
    switch (c->kind) {
        case Chor::Kind::End: return c;
        case Chor::Kind::Com: {
            ChorPtr cont = c->binder == y ? c->cont : chor_subst(c->cont, x, y);
            return chor_com(c->from, sub(c->value), c->to, c->binder, sub(c->channel), cont);
        }
        case Chor::Kind::Res:
            if (c->channel == y) return c;
            return chor_res(c->channel, chor_subst(c->cont, x, y));
        case Chor::Kind::Choice: {
            std::vector<std::pair<std::string, ChorPtr>> sel;
            for (auto& [l, b] : c->selectable) sel.emplace_back(l, chor_subst(b, x, y));
            std::vector<std::pair<std::string, ProcessPtr>> gar;
            for (auto& [l, s] : c->garbage) gar.emplace_back(l, substitute(s, x, y));
            return chor_choice(c->from, c->to, sub(c->channel), std::move(sel), std::move(gar));
        }
    }
    return c;
}

// ----- labels and reduction ------------------------------------------------

struct ReductionLabel {
    enum class Kind { Com, Bra };
    Kind kind = Kind::Com;
    std::string p, q, k;  // Bra uses p and k only

    static ReductionLabel com(std::string p, std::string q, std::string k) {
        return ReductionLabel{Kind::Com, std::move(p), std::move(q), std::move(k)};
    }
    static ReductionLabel bra(std::string p, std::string k) {
        return ReductionLabel{Kind::Bra, std::move(p), "", std::move(k)};
    }

    std::set<std::string> names() const {
        if (kind == Kind::Com) return {p, q, k};
        return {p, k};
    }

    bool operator==(const ReductionLabel& o) const {
        return kind == o.kind && p == o.p && q == o.q && k == o.k;
    }

    std::string str() const {
        return kind == Kind::Com ? "Com(" + p + "," + q + "," + k + ")" : "Bra(" + p + "," + k + ")";
    }
};

inline std::string chor_key(const ChorPtr& c);

// All one-step labeled reductions, including the out-of-order delay rules.
// Steps are de-duplicated by (label, target).
inline std::vector<std::pair<ReductionLabel, ChorPtr>> chor_steps(const ChorPtr& c) {
    std::vector<std::pair<ReductionLabel, ChorPtr>> out;
    auto add = [&](ReductionLabel l, ChorPtr t) {
        for (auto& [l2, t2] : out)
            if (l2 == l && chor_key(t2) == chor_key(t)) return;
        out.emplace_back(std::move(l), std::move(t));
    };
    switch (c->kind) {
        case Chor::Kind::End: return out;
        case Chor::Kind::Com: {
            add(ReductionLabel::com(c->from, c->to, c->channel), chor_subst(c->cont, c->value, c->binder));
            for (auto& [mu, t] : chor_steps(c->cont)) {  // D-Com
                auto names = mu.names();
                if (names.count(c->from) || names.count(c->to) || names.count(c->channel)) continue;
                add(mu, chor_com(c->from, c->value, c->to, c->binder, c->channel, t));
            }
            return out;
        }
        case Chor::Kind::Res: {
            for (auto& [mu, t] : chor_steps(c->cont)) add(mu, chor_res(c->channel, t));
            return out;
        }
        case Chor::Kind::Choice: {
            if (c->selectable.size() > 1) {  // internal choice narrows to one label
                for (auto& [l, b] : c->selectable)
                    add(ReductionLabel::bra(c->from, c->channel),
                        chor_choice(c->from, c->to, c->channel, {{l, b}}, c->garbage));
            } else {  // the label is communicated
                add(ReductionLabel::com(c->from, c->to, c->channel), c->selectable.front().second);
            }
            // D-Choice: a step available in every selectable branch
            std::vector<std::vector<std::pair<ReductionLabel, ChorPtr>>> all;
            for (auto& [l, b] : c->selectable) all.push_back(chor_steps(b));
            for (auto& [mu, t0] : all.front()) {
                auto names = mu.names();
                if (names.count(c->from) || names.count(c->to) || names.count(c->channel)) continue;
                std::vector<std::pair<std::string, ChorPtr>> sel;
                sel.emplace_back(c->selectable.front().first, t0);
                bool everywhere = true;
                for (std::size_t i = 1; i < all.size() && everywhere; ++i) {
                    bool found = false;
                    for (auto& [mu2, t2] : all[i]) {
                        if (mu2 == mu) {
                            sel.emplace_back(c->selectable[i].first, t2);
                            found = true;
                            break;
                        }
                    }
                    everywhere = found;
                }
                if (everywhere)
                    add(mu, chor_choice(c->from, c->to, c->channel, std::move(sel), c->garbage));
            }
            return out;
        }
    }
    return out;
}

// ----- endpoint networks ----------------------------------------------------

struct EndpointNetwork {
    std::vector<std::string> restricted;
    std::vector<std::pair<std::string, ProcessPtr>> components;  // name -> sequential body
};

inline bool is_sequential(const ProcessPtr& p) {
    switch (p->kind) {
        case Process::Kind::Par:
        case Process::Kind::Res: return false;
        case Process::Kind::Nil: return true;
        case Process::Kind::Send:
        case Process::Kind::Recv: return is_sequential(p->cont);
        case Process::Kind::LabelSend:
        case Process::Kind::LabelRecv:
            for (auto& [l, q] : p->branches)
                if (!is_sequential(q)) return false;
            return true;
    }
    return true;
}

inline void check_network(const EndpointNetwork& n) {
    std::set<std::string> seen;
    for (auto& [name, body] : n.components) {
        if (!seen.insert(name).second) throw std::invalid_argument("duplicate process name " + name);
        if (!is_sequential(body)) throw std::invalid_argument("component " + name + " is not sequential");
    }
}

inline ProcessPtr network_process(const EndpointNetwork& n) {
    std::vector<ProcessPtr> bodies;
    for (auto& [name, body] : n.components) bodies.push_back(body);
    return res_of(n.restricted, par_of(bodies));
}

// Nil components dropped, names sorted, bodies alpha-canonical.
inline std::string network_key(const EndpointNetwork& n) {
    std::vector<std::string> rs = n.restricted;
    std::sort(rs.begin(), rs.end());
    std::vector<std::pair<std::string, std::string>> comps;
    for (auto& [name, body] : n.components)
        if (body->kind != Process::Kind::Nil) comps.emplace_back(name, struct_key(body));
    std::sort(comps.begin(), comps.end());
    std::string out = "nu{";
    std::set<std::string> used;
    for (auto& [name, body] : n.components) {
        auto fn = free_names(body);
        used.insert(fn.begin(), fn.end());
    }
    for (auto& r : rs)
        if (used.count(r)) out += r + ",";
    out += "}";
    for (auto& [name, key] : comps) out += name + "[" + key + "]|";
    return out;
}

inline bool network_equiv(const EndpointNetwork& a, const EndpointNetwork& b) {
    return network_key(a) == network_key(b);
}

inline std::vector<std::pair<ReductionLabel, EndpointNetwork>> network_steps(const EndpointNetwork& n) {
    std::vector<std::pair<ReductionLabel, EndpointNetwork>> out;
    auto add = [&](ReductionLabel l, EndpointNetwork t) {
        for (auto& [l2, t2] : out)
            if (l2 == l && network_key(t2) == network_key(t)) return;
        out.emplace_back(std::move(l), std::move(t));
    };
    for (std::size_t i = 0; i < n.components.size(); ++i) {
        const auto& [pn, pb] = n.components[i];
        // E-Choice
        if (pb->kind == Process::Kind::LabelSend && pb->branches.size() > 1) {
            for (auto& branch : pb->branches) {
                EndpointNetwork t = n;
                t.components[i].second = label_send(pb->subject, {branch});
                add(ReductionLabel::bra(pn, pb->subject), std::move(t));
            }
        }
        for (std::size_t j = 0; j < n.components.size(); ++j) {
            if (i == j) continue;
            const auto& [qn, qb] = n.components[j];
            // E-Com
            if (pb->kind == Process::Kind::Send && qb->kind == Process::Kind::Recv &&
                pb->subject == qb->subject) {
                EndpointNetwork t = n;
                t.components[i].second = pb->cont;
                t.components[j].second = substitute(qb->cont, pb->object, qb->object);
                add(ReductionLabel::com(pn, qn, pb->subject), std::move(t));
            }
            // E-Label
            if (pb->kind == Process::Kind::LabelSend && pb->branches.size() == 1 &&
                qb->kind == Process::Kind::LabelRecv && pb->subject == qb->subject) {
                const auto& l = pb->branches.front().first;
                for (auto& branch : qb->branches) {
                    if (branch.first != l) continue;
                    EndpointNetwork t = n;
                    t.components[i].second = pb->branches.front().second;
                    t.components[j].second = branch.second;
                    add(ReductionLabel::com(pn, qn, pb->subject), std::move(t));
                }
            }
        }
    }
    return out;
}

// ----- merge and endpoint projection ----------------------------------------

inline std::optional<ProcessPtr> merge(const ProcessPtr& a, const ProcessPtr& b);

inline std::optional<std::vector<std::pair<std::string, ProcessPtr>>> merge_branch_union(
    const std::vector<std::pair<std::string, ProcessPtr>>& as,
    const std::vector<std::pair<std::string, ProcessPtr>>& bs) {
    std::vector<std::pair<std::string, ProcessPtr>> out;
    std::map<std::string, ProcessPtr> right;
    for (auto& [l, q] : bs) right[l] = q;
    std::set<std::string> done;
    for (auto& [l, q] : as) {
        auto it = right.find(l);
        if (it == right.end()) {
            out.emplace_back(l, q);
        } else {
            auto m = merge(q, it->second);
            if (!m) return std::nullopt;
            out.emplace_back(l, *m);
        }
        done.insert(l);
    }
    for (auto& [l, q] : bs)
        if (!done.count(l)) out.emplace_back(l, q);
    return out;
}

// The merge operator on sequential endpoint processes. Absence = undefined.
inline std::optional<ProcessPtr> merge(const ProcessPtr& a, const ProcessPtr& b) {
    if (a->kind != b->kind) return std::nullopt;
    switch (a->kind) {
        case Process::Kind::Nil: return nil();
        case Process::Kind::Send: {
            if (a->subject != b->subject || a->object != b->object) return std::nullopt;
            auto m = merge(a->cont, b->cont);
            if (!m) return std::nullopt;
            return send(a->subject, a->object, *m);
        }
        case Process::Kind::Recv: {
            if (a->subject != b->subject || a->object != b->object) return std::nullopt;
            auto m = merge(a->cont, b->cont);
            if (!m) return std::nullopt;
            return recv(a->subject, a->object, *m);
        }
        case Process::Kind::LabelRecv: {  // union with branchwise merge on the intersection
            if (a->subject != b->subject) return std::nullopt;
            auto bs = merge_branch_union(a->branches, b->branches);
            if (!bs) return std::nullopt;
            return label_recv(a->subject, std::move(*bs));
        }
        case Process::Kind::LabelSend: {  // only with identical label sets
            if (a->subject != b->subject || a->branches.size() != b->branches.size()) return std::nullopt;
            std::map<std::string, ProcessPtr> right;
            for (auto& [l, q] : b->branches) right[l] = q;
            std::vector<std::pair<std::string, ProcessPtr>> out;
            for (auto& [l, q] : a->branches) {
                auto it = right.find(l);
                if (it == right.end()) return std::nullopt;
                auto m = merge(q, it->second);
                if (!m) return std::nullopt;
                out.emplace_back(l, *m);
            }
            return label_send(a->subject, std::move(out));
        }
        default: return std::nullopt;
    }
}

inline std::optional<EndpointNetwork> merge(const EndpointNetwork& a, const EndpointNetwork& b) {
    if (a.restricted != b.restricted || a.components.size() != b.components.size()) return std::nullopt;
    EndpointNetwork out;
    out.restricted = a.restricted;
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        if (a.components[i].first != b.components[i].first) return std::nullopt;
        auto m = merge(a.components[i].second, b.components[i].second);
        if (!m) return std::nullopt;
        out.components.emplace_back(a.components[i].first, *m);
    }
    return out;
}

// P >= Q iff P merged with Q is exactly P.
inline bool merge_order(const ProcessPtr& a, const ProcessPtr& b) {
    auto m = merge(a, b);
    return m && equal(*m, a);
}

inline bool merge_order(const EndpointNetwork& a, const EndpointNetwork& b) {
    auto m = merge(a, b);
    if (!m) return false;
    if (m->components.size() != a.components.size()) return false;
    for (std::size_t i = 0; i < a.components.size(); ++i)
        if (!equal(m->components[i].second, a.components[i].second)) return false;
    return true;
}

struct EppError : std::runtime_error {
    std::string process;      // whose projection failed
    std::string left_label, right_label;
    EppError(std::string proc, std::string l1, std::string l2)
        : std::runtime_error("unprojectable: merge undefined at process " + proc +
                             " between branches '" + l1 + "' and '" + l2 + "'"),
          process(std::move(proc)), left_label(std::move(l1)), right_label(std::move(l2)) {}
};

inline constexpr const char* kEppDefaultProcess = "p0";

// Per-process projection of a flat choreography; nullopt when a merge is
// undefined (the thrown detail is caught by the driver below).
inline ProcessPtr epp_at(const ChorPtr& c, const std::string& r) {
    switch (c->kind) {
        case Chor::Kind::End: return nil();
        case Chor::Kind::Res: throw std::invalid_argument("epp_at: choreography is not flat");
        case Chor::Kind::Com: {
            ProcessPtr cont = epp_at(c->cont, r);
            if (r == c->from) return send(c->channel, c->value, cont);
            if (r == c->to) return recv(c->channel, c->binder, cont);
            return cont;
        }
        case Chor::Kind::Choice: {
            if (r == c->from) {
                std::vector<std::pair<std::string, ProcessPtr>> bs;
                for (auto& [l, b] : c->selectable) bs.emplace_back(l, epp_at(b, r));
                return label_send(c->channel, std::move(bs));
            }
            if (r == c->to) {
                std::vector<std::pair<std::string, ProcessPtr>> bs;
                for (auto& [l, b] : c->selectable) bs.emplace_back(l, epp_at(b, r));
                for (auto& [l, s] : c->garbage) bs.emplace_back(l, s);
                return label_recv(c->channel, std::move(bs));
            }
            ProcessPtr acc = epp_at(c->selectable.front().second, r);
            for (std::size_t i = 1; i < c->selectable.size(); ++i) {
                auto m = merge(acc, epp_at(c->selectable[i].second, r));
                if (!m) throw EppError(r, c->selectable.front().first, c->selectable[i].first);
                acc = *m;
            }
            return acc;
        }
    }
    return nil();
}

inline std::optional<EndpointNetwork> epp(const ChorPtr& c, std::string* error = nullptr) {
    if (!is_flat(c)) throw std::invalid_argument("epp: defined only for flat choreographies");
    std::vector<std::string> restricted;
    ChorPtr body = c;
    while (body->kind == Chor::Kind::Res) {
        restricted.push_back(body->channel);
        body = body->cont;
    }
    EndpointNetwork n;
    n.restricted = std::move(restricted);
    // deterministic name order: first appearance in the choreography
    std::vector<std::string> names;
    struct Names {
        std::vector<std::string>& names;
        void push(const std::string& s) {
            if (std::find(names.begin(), names.end(), s) == names.end()) names.push_back(s);
        }
        void go(const ChorPtr& c) {
            switch (c->kind) {
                case Chor::Kind::End: return;
                case Chor::Kind::Com: push(c->from); push(c->to); go(c->cont); return;
                case Chor::Kind::Res: go(c->cont); return;
                case Chor::Kind::Choice:
                    push(c->from);
                    push(c->to);
                    for (auto& [l, b] : c->selectable) go(b);
                    return;
            }
        }
    };
    Names{names}.go(body);
    try {
        if (names.empty()) {
            n.components.emplace_back(kEppDefaultProcess, nil());
        } else {
            for (auto& pn : names) n.components.emplace_back(pn, epp_at(body, pn));
        }
    } catch (const EppError& e) {
        if (error) *error = e.what();
        return std::nullopt;
    }
    return n;
}

inline std::string chor_key(const ChorPtr& c) {
    switch (c->kind) {
        case Chor::Kind::End: return "0";
        case Chor::Kind::Com:
            return "com(" + c->from + "," + c->value + "," + c->to + "," + c->binder + "," +
                   c->channel + ");" + chor_key(c->cont);
        case Chor::Kind::Res: return "nu " + c->channel + "." + chor_key(c->cont);
        case Chor::Kind::Choice: {
            std::vector<std::string> sel, gar;
            for (auto& [l, b] : c->selectable) sel.push_back(l + ":" + chor_key(b));
            for (auto& [l, s] : c->garbage) gar.push_back(l + ":" + struct_key(s));
            std::sort(sel.begin(), sel.end());
            std::sort(gar.begin(), gar.end());
            std::string out = "choice(" + c->from + "," + c->to + "," + c->channel + "){";
            for (auto& s : sel) out += s + ",";
            out += "|";
            for (auto& s : gar) out += s + ",";
            return out + "}";
        }
    }
    return "";
}

}  // namespace pil

#endif
