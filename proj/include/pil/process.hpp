#ifndef PIL_PROCESS_HPP
#define PIL_PROCESS_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pil/names.hpp"

namespace pil {

struct Process;
using ProcessPtr = std::shared_ptr<const Process>;

// Recursion-free pi-calculus terms. Par stays binary with a canonical
// right-nested spine; branch lists are ordered and labels are distinct.
// `tag` identifies the prefix occurrence for partner analysis; it is ignored
// by equality, alpha-equivalence and canonical forms.
struct Process {
    enum class Kind { Nil, Send, Recv, Par, Res, LabelSend, LabelRecv };

    Kind kind = Kind::Nil;
    std::string subject;  // channel of Send/Recv/LabelSend/LabelRecv, binder of Res
    std::string object;   // sent name (Send) or receive binder (Recv)
    ProcessPtr cont;      // continuation of Send/Recv, body of Res
    ProcessPtr left, right;                                  // Par
    std::vector<std::pair<std::string, ProcessPtr>> branches;  // label constructs
    int tag = -1;
};

inline ProcessPtr nil() {
    static const ProcessPtr n = std::make_shared<Process>();
    return n;
}

inline ProcessPtr send(std::string x, std::string y, ProcessPtr cont, int tag = -1) {
    auto p = std::make_shared<Process>();
    p->kind = Process::Kind::Send;
    p->subject = std::move(x);
    p->object = std::move(y);
    p->cont = std::move(cont);
    p->tag = tag;
    return p;
}

inline ProcessPtr recv(std::string x, std::string y, ProcessPtr cont, int tag = -1) {
    auto p = std::make_shared<Process>();
    p->kind = Process::Kind::Recv;
    p->subject = std::move(x);
    p->object = std::move(y);
    p->cont = std::move(cont);
    p->tag = tag;
    return p;
}

inline ProcessPtr par(ProcessPtr a, ProcessPtr b) {
    auto p = std::make_shared<Process>();
    p->kind = Process::Kind::Par;
    p->left = std::move(a);
    p->right = std::move(b);
    return p;
}

inline ProcessPtr res(std::string x, ProcessPtr body) {
    auto p = std::make_shared<Process>();
    p->kind = Process::Kind::Res;
    p->subject = std::move(x);
    p->cont = std::move(body);
    return p;
}

inline ProcessPtr label_branch(Process::Kind kind,
                               std::string x,
                               std::vector<std::pair<std::string, ProcessPtr>> branches,
                               int tag = -1) {
    if (branches.empty()) throw std::invalid_argument("label construct needs at least one branch");
    auto p = std::make_shared<Process>();
    p->kind = kind;
    p->subject = std::move(x);
    p->branches = std::move(branches);
    p->tag = tag;
    return p;
}

inline ProcessPtr label_send(std::string x, std::vector<std::pair<std::string, ProcessPtr>> bs, int tag = -1) {
    return label_branch(Process::Kind::LabelSend, std::move(x), std::move(bs), tag);
}

inline ProcessPtr label_recv(std::string x, std::vector<std::pair<std::string, ProcessPtr>> bs, int tag = -1) {
    return label_branch(Process::Kind::LabelRecv, std::move(x), std::move(bs), tag);
}

// Right-nested parallel spine over a component list.
inline ProcessPtr par_of(const std::vector<ProcessPtr>& components) {
    if (components.empty()) return nil();
    ProcessPtr acc = components.back();
    for (auto it = components.rbegin() + 1; it != components.rend(); ++it) acc = par(*it, acc);
    return acc;
}

inline ProcessPtr res_of(const std::vector<std::string>& binders, ProcessPtr body) {
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) body = res(*it, std::move(body));
    return body;
}

inline bool equal(const ProcessPtr& a, const ProcessPtr& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Process::Kind::Nil: return true;
        case Process::Kind::Send:
        case Process::Kind::Recv:
            return a->subject == b->subject && a->object == b->object && equal(a->cont, b->cont);
        case Process::Kind::Par: return equal(a->left, b->left) && equal(a->right, b->right);
        case Process::Kind::Res: return a->subject == b->subject && equal(a->cont, b->cont);
        case Process::Kind::LabelSend:
        case Process::Kind::LabelRecv: {
            if (a->subject != b->subject || a->branches.size() != b->branches.size()) return false;
            for (std::size_t i = 0; i < a->branches.size(); ++i) {
                if (a->branches[i].first != b->branches[i].first) return false;
                if (!equal(a->branches[i].second, b->branches[i].second)) return false;
            }
            return true;
        }
    }
    return false;
}

inline void collect_free_names(const ProcessPtr& p, std::set<std::string>& bound_here,
                               std::set<std::string>& out) {
    switch (p->kind) {
        case Process::Kind::Nil: return;
        case Process::Kind::Send:
            if (!bound_here.count(p->subject)) out.insert(p->subject);
            if (!bound_here.count(p->object)) out.insert(p->object);
            collect_free_names(p->cont, bound_here, out);
            return;
        case Process::Kind::Recv: {
            if (!bound_here.count(p->subject)) out.insert(p->subject);
            bool fresh = bound_here.insert(p->object).second;
            collect_free_names(p->cont, bound_here, out);
            if (fresh) bound_here.erase(p->object);
            return;
        }
        case Process::Kind::Par:
            collect_free_names(p->left, bound_here, out);
            collect_free_names(p->right, bound_here, out);
            return;
        case Process::Kind::Res: {
            bool fresh = bound_here.insert(p->subject).second;
            collect_free_names(p->cont, bound_here, out);
            if (fresh) bound_here.erase(p->subject);
            return;
        }
        case Process::Kind::LabelSend:
        case Process::Kind::LabelRecv:
            if (!bound_here.count(p->subject)) out.insert(p->subject);
            for (auto& [l, q] : p->branches) collect_free_names(q, bound_here, out);
            return;
    }
}

inline std::set<std::string> free_names(const ProcessPtr& p) {
    std::set<std::string> bound, out;
    collect_free_names(p, bound, out);
    return out;
}

inline void collect_bound_names(const ProcessPtr& p, std::set<std::string>& out) {
    switch (p->kind) {
        case Process::Kind::Nil: return;
        case Process::Kind::Send: collect_bound_names(p->cont, out); return;
        case Process::Kind::Recv:
            out.insert(p->object);
            collect_bound_names(p->cont, out);
            return;
        case Process::Kind::Par:
            collect_bound_names(p->left, out);
            collect_bound_names(p->right, out);
            return;
        case Process::Kind::Res:
            out.insert(p->subject);
            collect_bound_names(p->cont, out);
            return;
        case Process::Kind::LabelSend:
        case Process::Kind::LabelRecv:
            for (auto& [l, q] : p->branches) collect_bound_names(q, out);
            return;
    }
}

inline std::set<std::string> bound_names(const ProcessPtr& p) {
    std::set<std::string> out;
    collect_bound_names(p, out);
    return out;
}

inline std::set<std::string> all_names(const ProcessPtr& p) {
    std::set<std::string> out = free_names(p);
    collect_bound_names(p, out);
    return out;
}

// P{x/y}: replace y by x. Follows the substitution table exactly: receive
// binders and restriction binders shadow, label subjects are renamed like
// send/receive subjects. Capture (x bound in p while y is free under the
// binder) is rejected; alpha-rename first.
inline ProcessPtr substitute(const ProcessPtr& p, const std::string& x, const std::string& y) {
    if (x == y) return p;
    if (bound_names(p).count(x))
        throw std::invalid_argument("substitute: replacement '" + x + "' is bound in the target; alpha-rename first");
    struct Impl {
        const std::string& x;
        const std::string& y;
        ProcessPtr go(const ProcessPtr& p) const {
            auto sub = [&](const std::string& n) { return n == y ? x : n; };
            switch (p->kind) {
                case Process::Kind::Nil: return p;
                case Process::Kind::Send: return send(sub(p->subject), sub(p->object), go(p->cont), p->tag);
                case Process::Kind::Recv:
                    if (p->object == y) return p;  // binder shadows y
                    return recv(sub(p->subject), p->object, go(p->cont), p->tag);
                case Process::Kind::Par: return par(go(p->left), go(p->right));
                case Process::Kind::Res:
                    if (p->subject == y) return p;
                    return res(p->subject, go(p->cont));
                case Process::Kind::LabelSend:
                case Process::Kind::LabelRecv: {
                    std::vector<std::pair<std::string, ProcessPtr>> bs;
                    bs.reserve(p->branches.size());
                    for (auto& [l, q] : p->branches) bs.emplace_back(l, go(q));
                    return label_branch(p->kind, sub(p->subject), std::move(bs), p->tag);
                }
            }
            return p;
        }
    };
    return Impl{x, y}.go(p);
}

namespace detail {

// Canonical string with de Bruijn-numbered binders; Par flattened and sorted,
// restriction blocks canonicalised over binder permutations. Serves as the
// decision procedure for both alpha-equivalence (reorder=false) and structural
// equivalence after normalization (reorder=true).
inline void flatten_par(const ProcessPtr& p, std::vector<ProcessPtr>& out) {
    if (p->kind == Process::Kind::Par) {
        flatten_par(p->left, out);
        flatten_par(p->right, out);
    } else {
        out.push_back(p);
    }
}

inline std::string canon(const ProcessPtr& p, std::map<std::string, int>& env, int& next, bool reorder);

inline std::string canon_with_binder(const ProcessPtr& body, const std::string& binder,
                                     std::map<std::string, int>& env, int& next, bool reorder) {
    int idx = next++;
    auto old = env.find(binder);
    std::optional<int> saved;
    if (old != env.end()) saved = old->second;
    env[binder] = idx;
    std::string s = canon(body, env, next, reorder);
    if (saved) env[binder] = *saved; else env.erase(binder);
    --next;  // indices are scoped
    return s;
}

inline std::string canon(const ProcessPtr& p, std::map<std::string, int>& env, int& next, bool reorder) {
    auto name = [&](const std::string& n) {
        auto it = env.find(n);
        return it == env.end() ? n : "%" + std::to_string(it->second);
    };
    switch (p->kind) {
        case Process::Kind::Nil: return "0";
        case Process::Kind::Send:
            return "!" + name(p->subject) + "<" + name(p->object) + ">." + canon(p->cont, env, next, reorder);
        case Process::Kind::Recv:
            return "?" + name(p->subject) + "." + canon_with_binder(p->cont, p->object, env, next, reorder);
        case Process::Kind::Par: {
            if (!reorder)
                return "(" + canon(p->left, env, next, reorder) + "|" + canon(p->right, env, next, reorder) + ")";
            std::vector<ProcessPtr> parts;
            flatten_par(p, parts);
            std::vector<std::string> ss;
            ss.reserve(parts.size());
            for (auto& q : parts) ss.push_back(canon(q, env, next, reorder));
            std::sort(ss.begin(), ss.end());
            std::string out = "(";
            for (auto& s : ss) out += s + "|";
            return out + ")";
        }
        case Process::Kind::Res: {
            if (!reorder) return "nu." + canon_with_binder(p->cont, p->subject, env, next, reorder);
            // maximal nu-block, canonical over binder order
            std::vector<std::string> binders;
            ProcessPtr body = p;
            while (body->kind == Process::Kind::Res) {
                binders.push_back(body->subject);
                body = body->cont;
            }
            std::sort(binders.begin(), binders.end());
            std::string best;
            do {
                std::map<std::string, int> env2 = env;
                int next2 = next;
                for (auto& b : binders) env2[b] = next2++;
                std::string s = canon(body, env2, next2, reorder);
                if (best.empty() || s < best) best = s;
            } while (std::next_permutation(binders.begin(), binders.end()));
            return "nu" + std::to_string(binders.size()) + "." + best;
        }
        case Process::Kind::LabelSend:
        case Process::Kind::LabelRecv: {
            std::vector<std::pair<std::string, std::string>> bs;
            for (auto& [l, q] : p->branches) bs.emplace_back(l, canon(q, env, next, reorder));
            std::sort(bs.begin(), bs.end());
            std::string out = (p->kind == Process::Kind::LabelSend ? "sel" : "bra");
            out += name(p->subject) + "{";
            for (auto& [l, s] : bs) out += l + ":" + s + ",";
            return out + "}";
        }
    }
    return "";
}

}  // namespace detail

inline std::string alpha_key(const ProcessPtr& p) {
    std::map<std::string, int> env;
    int next = 0;
    return detail::canon(p, env, next, /*reorder=*/false);
}

inline bool alpha_equiv(const ProcessPtr& p, const ProcessPtr& q) {
    return alpha_key(p) == alpha_key(q);
}

// Alpha-rename so every binder is unique and distinct from every free name.
inline ProcessPtr make_unambiguous(const ProcessPtr& p, NameSupply& supply) {
    supply.reserve_all(free_names(p));
    struct Impl {
        NameSupply& supply;
        ProcessPtr go(const ProcessPtr& p, std::map<std::string, std::string>& ren) {
            auto look = [&](const std::string& n) {
                auto it = ren.find(n);
                return it == ren.end() ? n : it->second;
            };
            switch (p->kind) {
                case Process::Kind::Nil: return p;
                case Process::Kind::Send: return send(look(p->subject), look(p->object), go(p->cont, ren), p->tag);
                case Process::Kind::Recv: {
                    std::string subj = look(p->subject);
                    std::string binder = p->object;
                    if (supply.is_reserved(binder)) binder = supply.fresh(binder);
                    else supply.reserve(binder);
                    std::optional<std::string> saved;
                    if (auto it = ren.find(p->object); it != ren.end()) saved = it->second;
                    ren[p->object] = binder;
                    auto cont = go(p->cont, ren);
                    if (saved) ren[p->object] = *saved; else ren.erase(p->object);
                    return recv(subj, binder, cont, p->tag);
                }
                case Process::Kind::Par: return par(go(p->left, ren), go(p->right, ren));
                case Process::Kind::Res: {
                    std::string binder = p->subject;
                    if (supply.is_reserved(binder)) binder = supply.fresh(binder);
                    else supply.reserve(binder);
                    std::optional<std::string> saved;
                    if (auto it = ren.find(p->subject); it != ren.end()) saved = it->second;
                    ren[p->subject] = binder;
                    auto body = go(p->cont, ren);
                    if (saved) ren[p->subject] = *saved; else ren.erase(p->subject);
                    return res(binder, body);
                }
                case Process::Kind::LabelSend:
                case Process::Kind::LabelRecv: {
                    std::vector<std::pair<std::string, ProcessPtr>> bs;
                    for (auto& [l, q] : p->branches) bs.emplace_back(l, go(q, ren));
                    return label_branch(p->kind, look(p->subject), std::move(bs), p->tag);
                }
            }
            return p;
        }
    };
    std::map<std::string, std::string> ren;
    return Impl{supply}.go(p, ren);
}

inline ProcessPtr make_unambiguous(const ProcessPtr& p) {
    NameSupply supply;
    return make_unambiguous(p, supply);
}

inline bool is_unambiguous(const ProcessPtr& p) {
    std::set<std::string> binders;
    std::set<std::string> frees = free_names(p);
    struct Impl {
        std::set<std::string>& binders;
        bool dup = false;
        void go(const ProcessPtr& p) {
            switch (p->kind) {
                case Process::Kind::Nil: return;
                case Process::Kind::Send: go(p->cont); return;
                case Process::Kind::Recv:
                    if (!binders.insert(p->object).second) dup = true;
                    go(p->cont);
                    return;
                case Process::Kind::Par: go(p->left); go(p->right); return;
                case Process::Kind::Res:
                    if (!binders.insert(p->subject).second) dup = true;
                    go(p->cont);
                    return;
                case Process::Kind::LabelSend:
                case Process::Kind::LabelRecv:
                    for (auto& [l, q] : p->branches) go(q);
                    return;
            }
        }
    };
    Impl impl{binders};
    impl.go(p);
    if (impl.dup) return false;
    for (auto& b : binders)
        if (frees.count(b)) return false;
    return true;
}

// Precongruence-maximal form: collapse P|Nil, drop vacuous restrictions,
// extrude restriction scopes outward over parallel. Requires an unambiguous
// input so extrusion side conditions hold without renaming.
inline ProcessPtr precongruence_normalize(const ProcessPtr& p) {
    switch (p->kind) {
        case Process::Kind::Nil: return p;
        case Process::Kind::Send: return send(p->subject, p->object, precongruence_normalize(p->cont), p->tag);
        case Process::Kind::Recv: return recv(p->subject, p->object, precongruence_normalize(p->cont), p->tag);
        case Process::Kind::LabelSend:
        case Process::Kind::LabelRecv: {
            std::vector<std::pair<std::string, ProcessPtr>> bs;
            for (auto& [l, q] : p->branches) bs.emplace_back(l, precongruence_normalize(q));
            return label_branch(p->kind, p->subject, std::move(bs), p->tag);
        }
        case Process::Kind::Res: {
            ProcessPtr body = precongruence_normalize(p->cont);
            if (!free_names(body).count(p->subject)) return body;
            return res(p->subject, body);
        }
        case Process::Kind::Par: {
            std::vector<ProcessPtr> parts;
            detail::flatten_par(p, parts);
            std::vector<std::string> binders;
            std::vector<ProcessPtr> flat;
            for (auto& q : parts) {
                ProcessPtr n = precongruence_normalize(q);
                while (n->kind == Process::Kind::Res) {  // extrude
                    binders.push_back(n->subject);
                    n = n->cont;
                }
                if (n->kind == Process::Kind::Par) {
                    detail::flatten_par(n, flat);
                } else if (n->kind != Process::Kind::Nil) {
                    flat.push_back(n);
                }
            }
            ProcessPtr body = par_of(flat);
            // re-check vacuity after Nil collapse
            std::set<std::string> fn = free_names(body);
            std::vector<std::string> kept;
            for (auto& b : binders)
                if (fn.count(b)) kept.push_back(b);
            return res_of(kept, body);
        }
    }
    return p;
}

inline std::string struct_key(const ProcessPtr& p) {
    ProcessPtr u = is_unambiguous(p) ? p : make_unambiguous(p);
    ProcessPtr n = precongruence_normalize(u);
    std::map<std::string, int> env;
    int next = 0;
    return detail::canon(n, env, next, /*reorder=*/true);
}

inline bool struct_equiv(const ProcessPtr& p, const ProcessPtr& q) {
    return struct_key(p) == struct_key(q);
}

inline bool is_nil_equiv(const ProcessPtr& p) { return struct_equiv(p, nil()); }

// Two parallel prefixes competing on one channel: two sends, two receives,
// two label-sends or two label-receives with the same subject.
struct RaceWitness {
    ProcessPtr first;
    ProcessPtr second;
};

inline std::optional<RaceWitness> find_race_shape(const ProcessPtr& p) {
    ProcessPtr u = is_unambiguous(p) ? p : make_unambiguous(p);
    ProcessPtr n = precongruence_normalize(u);
    while (n->kind == Process::Kind::Res) n = n->cont;
    std::vector<ProcessPtr> parts;
    detail::flatten_par(n, parts);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            const auto& a = parts[i];
            const auto& b = parts[j];
            if (a->kind != b->kind) continue;
            if (a->kind == Process::Kind::Send || a->kind == Process::Kind::Recv ||
                a->kind == Process::Kind::LabelSend || a->kind == Process::Kind::LabelRecv) {
                if (a->subject == b->subject) return RaceWitness{a, b};
            }
        }
    }
    return std::nullopt;
}

}  // namespace pil

#endif
