#ifndef PIL_FORMULA_HPP
#define PIL_FORMULA_HPP

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

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// PiL formulas: first-order MALL with mix, the self-dual non-commutative
// non-associative `prec`, n-ary oplus/with, and the nominal quantifiers
// new/ya. Hole is the context marker and never appears in proper formulas.
struct Formula {
    enum class Kind {
        Unit, SendAtom, RecvAtom, Par, Tensor, Prec, Oplus, With,
        Forall, Exists, New, Ya, Hole
    };

    Kind kind = Kind::Unit;
    std::string x, y;      // atom arguments; x doubles as the quantifier variable
    FormulaPtr left, right;        // binary connectives
    std::vector<FormulaPtr> parts; // oplus/with, arity >= 1
    FormulaPtr body;               // quantifier body
};

inline FormulaPtr funit() {
    static const FormulaPtr u = std::make_shared<Formula>();
    return u;
}

inline FormulaPtr fhole() {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::Hole;
    return f;
}

inline FormulaPtr fatom(Formula::Kind kind, std::string x, std::string y) {
    auto f = std::make_shared<Formula>();
    f->kind = kind;
    f->x = std::move(x);
    f->y = std::move(y);
    return f;
}

inline FormulaPtr fsend(std::string x, std::string y) { return fatom(Formula::Kind::SendAtom, std::move(x), std::move(y)); }
inline FormulaPtr frecv(std::string x, std::string y) { return fatom(Formula::Kind::RecvAtom, std::move(x), std::move(y)); }

inline FormulaPtr fbin(Formula::Kind kind, FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = kind;
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}

inline FormulaPtr fpar(FormulaPtr a, FormulaPtr b) { return fbin(Formula::Kind::Par, std::move(a), std::move(b)); }
inline FormulaPtr ftens(FormulaPtr a, FormulaPtr b) { return fbin(Formula::Kind::Tensor, std::move(a), std::move(b)); }
inline FormulaPtr fprec(FormulaPtr a, FormulaPtr b) { return fbin(Formula::Kind::Prec, std::move(a), std::move(b)); }

inline FormulaPtr fnary(Formula::Kind kind, std::vector<FormulaPtr> parts) {
    if (parts.empty()) throw std::invalid_argument("oplus/with need positive arity");
    auto f = std::make_shared<Formula>();
    f->kind = kind;
    f->parts = std::move(parts);
    return f;
}

inline FormulaPtr foplus(std::vector<FormulaPtr> parts) { return fnary(Formula::Kind::Oplus, std::move(parts)); }
inline FormulaPtr fwith(std::vector<FormulaPtr> parts) { return fnary(Formula::Kind::With, std::move(parts)); }

inline FormulaPtr fquant(Formula::Kind kind, std::string x, FormulaPtr body) {
    auto f = std::make_shared<Formula>();
    f->kind = kind;
    f->x = std::move(x);
    f->body = std::move(body);
    return f;
}

inline FormulaPtr fforall(std::string x, FormulaPtr b) { return fquant(Formula::Kind::Forall, std::move(x), std::move(b)); }
inline FormulaPtr fexists(std::string x, FormulaPtr b) { return fquant(Formula::Kind::Exists, std::move(x), std::move(b)); }
inline FormulaPtr fnew(std::string x, FormulaPtr b) { return fquant(Formula::Kind::New, std::move(x), std::move(b)); }
inline FormulaPtr fya(std::string x, FormulaPtr b) { return fquant(Formula::Kind::Ya, std::move(x), std::move(b)); }

inline bool is_quantifier(Formula::Kind k) {
    return k == Formula::Kind::Forall || k == Formula::Kind::Exists ||
           k == Formula::Kind::New || k == Formula::Kind::Ya;
}

inline bool is_binary(Formula::Kind k) {
    return k == Formula::Kind::Par || k == Formula::Kind::Tensor || k == Formula::Kind::Prec;
}

inline bool equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Formula::Kind::Unit:
        case Formula::Kind::Hole: return true;
        case Formula::Kind::SendAtom:
        case Formula::Kind::RecvAtom: return a->x == b->x && a->y == b->y;
        case Formula::Kind::Par:
        case Formula::Kind::Tensor:
        case Formula::Kind::Prec: return equal(a->left, b->left) && equal(a->right, b->right);
        case Formula::Kind::Oplus:
        case Formula::Kind::With: {
            if (a->parts.size() != b->parts.size()) return false;
            for (std::size_t i = 0; i < a->parts.size(); ++i)
                if (!equal(a->parts[i], b->parts[i])) return false;
            return true;
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::New:
        case Formula::Kind::Ya: return a->x == b->x && equal(a->body, b->body);
    }
    return false;
}

inline FormulaPtr negate(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::Unit: return f;
        case Formula::Kind::Hole: return f;
        case Formula::Kind::SendAtom: return frecv(f->x, f->y);
        case Formula::Kind::RecvAtom: return fsend(f->x, f->y);
        case Formula::Kind::Par: return ftens(negate(f->left), negate(f->right));
        case Formula::Kind::Tensor: return fpar(negate(f->left), negate(f->right));
        case Formula::Kind::Prec: return fprec(negate(f->left), negate(f->right));
        case Formula::Kind::Oplus: {
            std::vector<FormulaPtr> ps;
            for (auto& p : f->parts) ps.push_back(negate(p));
            return fwith(std::move(ps));
        }
        case Formula::Kind::With: {
            std::vector<FormulaPtr> ps;
            for (auto& p : f->parts) ps.push_back(negate(p));
            return foplus(std::move(ps));
        }
        case Formula::Kind::Forall: return fexists(f->x, negate(f->body));
        case Formula::Kind::Exists: return fforall(f->x, negate(f->body));
        case Formula::Kind::New: return fya(f->x, negate(f->body));
        case Formula::Kind::Ya: return fnew(f->x, negate(f->body));
    }
    return f;
}

// A |- B  desugars to  ~A par B.
inline FormulaPtr flimp(const FormulaPtr& a, const FormulaPtr& b) { return fpar(negate(a), b); }

inline void collect_free_vars(const FormulaPtr& f, std::set<std::string>& bound, std::set<std::string>& out) {
    switch (f->kind) {
        case Formula::Kind::Unit:
        case Formula::Kind::Hole: return;
        case Formula::Kind::SendAtom:
        case Formula::Kind::RecvAtom:
            if (!bound.count(f->x)) out.insert(f->x);
            if (!bound.count(f->y)) out.insert(f->y);
            return;
        case Formula::Kind::Par:
        case Formula::Kind::Tensor:
        case Formula::Kind::Prec:
            collect_free_vars(f->left, bound, out);
            collect_free_vars(f->right, bound, out);
            return;
        case Formula::Kind::Oplus:
        case Formula::Kind::With:
            for (auto& p : f->parts) collect_free_vars(p, bound, out);
            return;
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::New:
        case Formula::Kind::Ya: {
            bool fresh = bound.insert(f->x).second;
            collect_free_vars(f->body, bound, out);
            if (fresh) bound.erase(f->x);
            return;
        }
    }
}

inline std::set<std::string> free_vars(const FormulaPtr& f) {
    std::set<std::string> bound, out;
    collect_free_vars(f, bound, out);
    return out;
}

// A{y/x}: replace free x by y. Clean inputs plus store/witness discipline keep
// this capture-free; a capture attempt is a logic error.
inline FormulaPtr fsubst(const FormulaPtr& f, const std::string& y, const std::string& x) {
    if (x == y) return f;
    auto sub = [&](const std::string& n) { return n == x ? y : n; };
    switch (f->kind) {
        case Formula::Kind::Unit:
        case Formula::Kind::Hole: return f;
        case Formula::Kind::SendAtom:
        case Formula::Kind::RecvAtom: return fatom(f->kind, sub(f->x), sub(f->y));
        case Formula::Kind::Par:
        case Formula::Kind::Tensor:
        case Formula::Kind::Prec: return fbin(f->kind, fsubst(f->left, y, x), fsubst(f->right, y, x));
        case Formula::Kind::Oplus:
        case Formula::Kind::With: {
            std::vector<FormulaPtr> ps;
            for (auto& p : f->parts) ps.push_back(fsubst(p, y, x));
            return fnary(f->kind, std::move(ps));
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::New:
        case Formula::Kind::Ya:
            if (f->x == x) return f;  // binder shadows
            if (f->x == y) throw std::logic_error("fsubst: capture of '" + y + "'");
            return fquant(f->kind, f->x, fsubst(f->body, y, x));
    }
    return f;
}

// Clean: every variable bound at most once (one universal/existential binder,
// or one dual new/ya pair), and never both bound and free.
inline bool is_clean(const FormulaPtr& f) {
    std::map<std::string, std::vector<Formula::Kind>> binders;
    std::set<std::string> free;
    struct Impl {
        std::map<std::string, std::vector<Formula::Kind>>& binders;
        std::set<std::string>& free;
        std::set<std::string> scope;
        void go(const FormulaPtr& f) {
            switch (f->kind) {
                case Formula::Kind::Unit:
                case Formula::Kind::Hole: return;
                case Formula::Kind::SendAtom:
                case Formula::Kind::RecvAtom:
                    if (!scope.count(f->x)) free.insert(f->x);
                    if (!scope.count(f->y)) free.insert(f->y);
                    return;
                case Formula::Kind::Par:
                case Formula::Kind::Tensor:
                case Formula::Kind::Prec: go(f->left); go(f->right); return;
                case Formula::Kind::Oplus:
                case Formula::Kind::With:
                    for (auto& p : f->parts) go(p);
                    return;
                default: {
                    binders[f->x].push_back(f->kind);
                    bool fresh = scope.insert(f->x).second;
                    go(f->body);
                    if (fresh) scope.erase(f->x);
                    return;
                }
            }
        }
    };
    Impl impl{binders, free};
    impl.go(f);
    for (auto& [v, kinds] : binders) {
        if (free.count(v)) return false;
        if (kinds.size() == 1) continue;
        if (kinds.size() == 2) {
            bool nu = kinds[0] == Formula::Kind::New || kinds[1] == Formula::Kind::New;
            bool ya = kinds[0] == Formula::Kind::Ya || kinds[1] == Formula::Kind::Ya;
            if (nu && ya) continue;  // dual nominal pair sharing the name
        }
        return false;
    }
    return true;
}

inline bool sequent_is_clean(const std::vector<FormulaPtr>& fs) {
    if (fs.empty()) return true;
    // fold the sequent into one par formula and reuse the formula predicate
    FormulaPtr acc = fs.back();
    for (auto it = fs.rbegin() + 1; it != fs.rend(); ++it) acc = fpar(*it, acc);
    return is_clean(acc);
}

// ----- contexts ---------------------------------------------------------

inline int hole_count(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::Hole: return 1;
        case Formula::Kind::Unit:
        case Formula::Kind::SendAtom:
        case Formula::Kind::RecvAtom: return 0;
        case Formula::Kind::Par:
        case Formula::Kind::Tensor:
        case Formula::Kind::Prec: return hole_count(f->left) + hole_count(f->right);
        case Formula::Kind::Oplus:
        case Formula::Kind::With: {
            int n = 0;
            for (auto& p : f->parts) n += hole_count(p);
            return n;
        }
        default: return hole_count(f->body);
    }
}

// A formula with exactly one hole.
struct FormulaContext {
    FormulaPtr shape;

    explicit FormulaContext(FormulaPtr s) : shape(std::move(s)) {
        if (hole_count(shape) != 1) throw std::invalid_argument("context must contain exactly one hole");
    }

    FormulaPtr plug(const FormulaPtr& a) const { return plug_into(shape, a); }

    // new x1...xn (hole par A)
    static FormulaContext nu_par(const std::vector<std::string>& binders, const FormulaPtr& a) {
        FormulaPtr f = fpar(fhole(), a);
        for (auto it = binders.rbegin(); it != binders.rend(); ++it) f = fnew(*it, f);
        return FormulaContext(f);
    }

private:
    static FormulaPtr plug_into(const FormulaPtr& f, const FormulaPtr& a) {
        switch (f->kind) {
            case Formula::Kind::Hole: return a;
            case Formula::Kind::Unit:
            case Formula::Kind::SendAtom:
            case Formula::Kind::RecvAtom: return f;
            case Formula::Kind::Par:
            case Formula::Kind::Tensor:
            case Formula::Kind::Prec: return fbin(f->kind, plug_into(f->left, a), plug_into(f->right, a));
            case Formula::Kind::Oplus:
            case Formula::Kind::With: {
                std::vector<FormulaPtr> ps;
                for (auto& p : f->parts) ps.push_back(plug_into(p, a));
                return fnary(f->kind, std::move(ps));
            }
            default: return fquant(f->kind, f->x, plug_into(f->body, a));
        }
    }
};

// ----- the process encoding ---------------------------------------------

inline FormulaPtr encode(const ProcessPtr& p) {
    if (!is_unambiguous(p)) throw std::invalid_argument("encode: process must be unambiguous");
    struct Impl {
        FormulaPtr go(const ProcessPtr& p) const {
            switch (p->kind) {
                case Process::Kind::Nil: return funit();
                case Process::Kind::Send: return fprec(fsend(p->subject, p->object), go(p->cont));
                case Process::Kind::Recv:
                    return fexists(p->object, fprec(frecv(p->subject, p->object), go(p->cont)));
                case Process::Kind::Par: return fpar(go(p->left), go(p->right));
                case Process::Kind::Res: return fnew(p->subject, go(p->cont));
                case Process::Kind::LabelSend: {
                    std::vector<FormulaPtr> parts;
                    for (auto& [l, q] : p->branches) parts.push_back(fprec(fsend(p->subject, l), go(q)));
                    return fwith(std::move(parts));
                }
                case Process::Kind::LabelRecv: {
                    std::vector<FormulaPtr> parts;
                    for (auto& [l, q] : p->branches) parts.push_back(fprec(frecv(p->subject, l), go(q)));
                    return foplus(std::move(parts));
                }
            }
            return funit();
        }
    };
    return Impl{}.go(p);
}

// Inverse of encode on its image. Fails on anything outside the image.
inline ProcessPtr decode(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::Unit: return nil();
        case Formula::Kind::Par: return par(decode(f->left), decode(f->right));
        case Formula::Kind::New: return res(f->x, decode(f->body));
        case Formula::Kind::Prec:
            if (f->left->kind == Formula::Kind::SendAtom)
                return send(f->left->x, f->left->y, decode(f->right));
            throw std::invalid_argument("decode: prec without a send-atom head");
        case Formula::Kind::Exists: {
            const FormulaPtr& b = f->body;
            if (b->kind == Formula::Kind::Prec && b->left->kind == Formula::Kind::RecvAtom &&
                b->left->x != f->x && b->left->y == f->x)
                return recv(b->left->x, f->x, decode(b->right));
            throw std::invalid_argument("decode: exists without a receive-atom head");
        }
        case Formula::Kind::With:
        case Formula::Kind::Oplus: {
            bool is_send = f->kind == Formula::Kind::With;
            std::string subject;
            std::vector<std::pair<std::string, ProcessPtr>> branches;
            for (auto& p : f->parts) {
                if (p->kind != Formula::Kind::Prec) throw std::invalid_argument("decode: branch without prec");
                const FormulaPtr& atom = p->left;
                Formula::Kind want = is_send ? Formula::Kind::SendAtom : Formula::Kind::RecvAtom;
                if (atom->kind != want) throw std::invalid_argument("decode: branch atom polarity mismatch");
                if (subject.empty()) subject = atom->x;
                else if (subject != atom->x) throw std::invalid_argument("decode: mixed branch subjects");
                branches.emplace_back(atom->y, decode(p->right));
            }
            return label_branch(is_send ? Process::Kind::LabelSend : Process::Kind::LabelRecv,
                                subject, std::move(branches));
        }
        default: throw std::invalid_argument("decode: formula outside the encoding image");
    }
}

// Decode restricted to images of sequential processes.
inline ProcessPtr decode_sequential(const FormulaPtr& f) {
    ProcessPtr p = decode(f);
    struct Check {
        void go(const ProcessPtr& p) const {
            switch (p->kind) {
                case Process::Kind::Par:
                case Process::Kind::Res:
                    throw std::invalid_argument("decode_sequential: formula encodes a non-sequential process");
                case Process::Kind::Send:
                case Process::Kind::Recv: go(p->cont); return;
                case Process::Kind::LabelSend:
                case Process::Kind::LabelRecv:
                    for (auto& [l, q] : p->branches) go(q);
                    return;
                case Process::Kind::Nil: return;
            }
        }
    };
    Check{}.go(p);
    return p;
}

// ----- unitization for the progress characterisation ----------------------

inline FormulaPtr unit_simplify(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::Unit:
        case Formula::Kind::Hole:
        case Formula::Kind::SendAtom:
        case Formula::Kind::RecvAtom: return f;
        case Formula::Kind::Prec: {
            FormulaPtr l = unit_simplify(f->left), r = unit_simplify(f->right);
            if (l->kind == Formula::Kind::Unit) return r;
            if (r->kind == Formula::Kind::Unit) return l;
            return fprec(l, r);
        }
        case Formula::Kind::Par: {
            FormulaPtr l = unit_simplify(f->left), r = unit_simplify(f->right);
            if (l->kind == Formula::Kind::Unit) return r;
            if (r->kind == Formula::Kind::Unit) return l;
            return fpar(l, r);
        }
        case Formula::Kind::Tensor: return fbin(f->kind, unit_simplify(f->left), unit_simplify(f->right));
        case Formula::Kind::Oplus:
        case Formula::Kind::With: {
            std::vector<FormulaPtr> ps;
            for (auto& p : f->parts) ps.push_back(unit_simplify(p));
            return fnary(f->kind, std::move(ps));  // branches are kept, never dropped
        }
        default: return fquant(f->kind, f->x, unit_simplify(f->body));
    }
}

// Replace every atom whose subject lies in `names` with the unit, then
// unit-simplify.
inline FormulaPtr unitize(const FormulaPtr& f, const std::set<std::string>& names) {
    struct Impl {
        const std::set<std::string>& names;
        FormulaPtr go(const FormulaPtr& f) const {
            switch (f->kind) {
                case Formula::Kind::Unit:
                case Formula::Kind::Hole: return f;
                case Formula::Kind::SendAtom:
                case Formula::Kind::RecvAtom: return names.count(f->x) ? funit() : f;
                case Formula::Kind::Par:
                case Formula::Kind::Tensor:
                case Formula::Kind::Prec: return fbin(f->kind, go(f->left), go(f->right));
                case Formula::Kind::Oplus:
                case Formula::Kind::With: {
                    std::vector<FormulaPtr> ps;
                    for (auto& p : f->parts) ps.push_back(go(p));
                    return fnary(f->kind, std::move(ps));
                }
                default: return fquant(f->kind, f->x, go(f->body));
            }
        }
    };
    return unit_simplify(Impl{names}.go(f));
}

// A send whose object is restricted by an enclosing nu: the process exports a
// private name, which the progress characterisation excludes.
inline bool has_private_mobility(const ProcessPtr& p) {
    struct Impl {
        bool found = false;
        std::set<std::string> nu_bound;
        void go(const ProcessPtr& p) {
            if (found) return;
            switch (p->kind) {
                case Process::Kind::Nil: return;
                case Process::Kind::Send:
                    if (nu_bound.count(p->object)) { found = true; return; }
                    go(p->cont);
                    return;
                case Process::Kind::Recv: go(p->cont); return;
                case Process::Kind::Par: go(p->left); go(p->right); return;
                case Process::Kind::Res: {
                    bool fresh = nu_bound.insert(p->subject).second;
                    go(p->cont);
                    if (fresh) nu_bound.erase(p->subject);
                    return;
                }
                case Process::Kind::LabelSend:
                case Process::Kind::LabelRecv:
                    for (auto& [l, q] : p->branches) go(q);
                    return;
            }
        }
    };
    Impl impl;
    impl.go(p);
    return impl.found;
}

}  // namespace pil

#endif
