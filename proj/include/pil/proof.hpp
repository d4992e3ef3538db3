#ifndef PIL_PROOF_HPP
#define PIL_PROOF_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pil/formula.hpp"

namespace pil {

enum class Nom { Nu, Ya };

// Nominal store: each variable occurs at most once.
using Store = std::map<std::string, Nom>;

struct Occurrence {
    int id = 0;
    FormulaPtr formula;
    std::string owner;  // process-name annotation; empty for plain judgements
};

struct Judgement {
    Store store;
    std::vector<Occurrence> sequent;

    std::set<std::string> free_vars_except(int skip_id) const {
        std::set<std::string> out;
        for (auto& occ : sequent) {
            if (occ.id == skip_id) continue;
            auto fv = free_vars(occ.formula);
            out.insert(fv.begin(), fv.end());
        }
        return out;
    }
};

enum class Rule {
    Ax, Unit, Mix, Par, Tensor, Prec, PrecUnit, Oplus, With,
    Forall, Exists, NuUnit, NuLoad, NuPop, YaUnit, YaLoad, YaPop, Cut
};

inline const char* rule_name(Rule r) {
    switch (r) {
        case Rule::Ax: return "ax";
        case Rule::Unit: return "unit";
        case Rule::Mix: return "mix";
        case Rule::Par: return "par";
        case Rule::Tensor: return "tens";
        case Rule::Prec: return "prec";
        case Rule::PrecUnit: return "prec-unit";
        case Rule::Oplus: return "oplus";
        case Rule::With: return "with";
        case Rule::Forall: return "all";
        case Rule::Exists: return "ex";
        case Rule::NuUnit: return "new-unit";
        case Rule::NuLoad: return "new-load";
        case Rule::NuPop: return "new-pop";
        case Rule::YaUnit: return "ya-unit";
        case Rule::YaLoad: return "ya-load";
        case Rule::YaPop: return "ya-pop";
        case Rule::Cut: return "cut";
    }
    return "?";
}

inline std::optional<Rule> rule_from_name(const std::string& s) {
    static const std::map<std::string, Rule> table = {
        {"ax", Rule::Ax},       {"unit", Rule::Unit},     {"mix", Rule::Mix},
        {"par", Rule::Par},     {"tens", Rule::Tensor},   {"prec", Rule::Prec},
        {"prec-unit", Rule::PrecUnit}, {"oplus", Rule::Oplus}, {"with", Rule::With},
        {"all", Rule::Forall},  {"ex", Rule::Exists},     {"new-unit", Rule::NuUnit},
        {"new-load", Rule::NuLoad}, {"new-pop", Rule::NuPop}, {"ya-unit", Rule::YaUnit},
        {"ya-load", Rule::YaLoad}, {"ya-pop", Rule::YaPop}, {"cut", Rule::Cut}};
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

// Split descriptor for the two-premise rules: which conclusion occurrences and
// store entries go to which premise.
struct Split {
    std::vector<int> left_ids, right_ids;
    std::vector<std::string> left_store, right_store;
};

struct RuleMeta {
    std::vector<int> principal;  // occurrence ids in the conclusion
    std::string witness;         // exists witness / popped store variable
    int branch = -1;             // 1-based oplus index
    Split split;
    FormulaPtr cut_formula;
};

struct Derivation;
using DerivationPtr = std::shared_ptr<const Derivation>;

struct Derivation {
    Judgement conclusion;
    Rule rule = Rule::Ax;
    RuleMeta meta;
    std::vector<DerivationPtr> premises;
};

struct CheckResult {
    bool ok = true;
    std::string message;

    static CheckResult fail(std::string m) { return {false, std::move(m)}; }
    static CheckResult good() { return {}; }
};

namespace detail {

inline const Occurrence* find_occ(const Judgement& j, int id) {
    for (auto& occ : j.sequent)
        if (occ.id == id) return &occ;
    return nullptr;
}

inline bool same_judgement(const Judgement& a, const Judgement& b) {
    if (a.store != b.store) return false;
    if (a.sequent.size() != b.sequent.size()) return false;
    // occurrence identity matters, order does not
    auto sorted = [](const Judgement& j) {
        std::vector<const Occurrence*> v;
        for (auto& o : j.sequent) v.push_back(&o);
        std::sort(v.begin(), v.end(), [](auto* x, auto* y) { return x->id < y->id; });
        return v;
    };
    auto va = sorted(a), vb = sorted(b);
    for (std::size_t i = 0; i < va.size(); ++i) {
        if (va[i]->id != vb[i]->id || va[i]->owner != vb[i]->owner) return false;
        if (!equal(va[i]->formula, vb[i]->formula)) return false;
    }
    return true;
}

// Expected premise: conclusion minus consumed occurrences plus new actives.
inline Judgement residual(const Judgement& j, const std::vector<int>& keep_ids,
                          std::vector<Occurrence> actives, Store store) {
    Judgement out;
    out.store = std::move(store);
    for (auto& occ : j.sequent)
        if (std::find(keep_ids.begin(), keep_ids.end(), occ.id) != keep_ids.end())
            out.sequent.push_back(occ);
    for (auto& a : actives) out.sequent.push_back(std::move(a));
    return out;
}

inline std::vector<int> ids_except(const Judgement& j, std::initializer_list<int> minus) {
    std::vector<int> out;
    for (auto& occ : j.sequent)
        if (std::find(minus.begin(), minus.end(), occ.id) == minus.end()) out.push_back(occ.id);
    return out;
}

inline bool partition_ok(const Judgement& j, const Split& s, std::initializer_list<int> principal) {
    std::set<int> all, got;
    for (auto& occ : j.sequent)
        if (std::find(principal.begin(), principal.end(), occ.id) == principal.end())
            all.insert(occ.id);
    for (int id : s.left_ids)
        if (!all.count(id) || !got.insert(id).second) return false;
    for (int id : s.right_ids)
        if (!all.count(id) || !got.insert(id).second) return false;
    if (got != all) return false;
    std::set<std::string> sall, sgot;
    for (auto& [v, t] : j.store) sall.insert(v);
    for (auto& v : s.left_store)
        if (!sall.count(v) || !sgot.insert(v).second) return false;
    for (auto& v : s.right_store)
        if (!sall.count(v) || !sgot.insert(v).second) return false;
    return sgot == sall;
}

inline Store store_subset(const Store& s, const std::vector<std::string>& vars) {
    Store out;
    for (auto& v : vars) {
        auto it = s.find(v);
        if (it != s.end()) out.insert(*it);
    }
    return out;
}

}  // namespace detail

// Validate a single node against its rule; premise subtrees are not recursed
// into (see check_derivation).
inline CheckResult check_rule(const Derivation& d) {
    using detail::find_occ;
    using detail::ids_except;
    using detail::residual;
    using detail::same_judgement;
    using K = Formula::Kind;
    const Judgement& j = d.conclusion;
    auto need_premises = [&](std::size_t n) -> std::optional<CheckResult> {
        if (d.premises.size() != n)
            return CheckResult::fail(std::string(rule_name(d.rule)) + ": expected " +
                                     std::to_string(n) + " premises, got " +
                                     std::to_string(d.premises.size()));
        return std::nullopt;
    };
    auto principal1 = [&]() -> const Occurrence* {
        if (d.meta.principal.size() != 1) return nullptr;
        return find_occ(j, d.meta.principal[0]);
    };
    auto match_premise = [&](std::size_t idx, const Judgement& expected) -> std::optional<CheckResult> {
        if (!same_judgement(d.premises[idx]->conclusion, expected))
            return CheckResult::fail(std::string(rule_name(d.rule)) + ": premise " +
                                     std::to_string(idx + 1) + " does not match the rule shape");
        return std::nullopt;
    };

    switch (d.rule) {
        case Rule::Ax: {
            if (auto r = need_premises(0)) return *r;
            if (j.sequent.size() != 2) return CheckResult::fail("ax: sequent must hold exactly two atoms");
            const FormulaPtr& a = j.sequent[0].formula;
            const FormulaPtr& b = j.sequent[1].formula;
            bool dual = (a->kind == K::SendAtom && b->kind == K::RecvAtom) ||
                        (a->kind == K::RecvAtom && b->kind == K::SendAtom);
            if (!dual || a->x != b->x || a->y != b->y)
                return CheckResult::fail("ax: formulas are not dual atoms on the same names");
            return CheckResult::good();
        }
        case Rule::Unit: {
            if (auto r = need_premises(0)) return *r;
            if (j.sequent.size() != 1 || j.sequent[0].formula->kind != K::Unit)
                return CheckResult::fail("unit: sequent must be the single unit");
            return CheckResult::good();
        }
        case Rule::Mix: {
            if (auto r = need_premises(2)) return *r;
            if (!detail::partition_ok(j, d.meta.split, {}))
                return CheckResult::fail("mix: split does not partition context and store");
            Judgement left = residual(j, d.meta.split.left_ids, {}, detail::store_subset(j.store, d.meta.split.left_store));
            Judgement right = residual(j, d.meta.split.right_ids, {}, detail::store_subset(j.store, d.meta.split.right_store));
            if (left.sequent.empty() || right.sequent.empty())
                return CheckResult::fail("mix: premises must be nonempty sequents");
            if (auto r = match_premise(0, left)) return *r;
            if (auto r = match_premise(1, right)) return *r;
            return CheckResult::good();
        }
        case Rule::Par: {
            if (auto r = need_premises(1)) return *r;
            const Occurrence* p = principal1();
            if (!p || p->formula->kind != K::Par) return CheckResult::fail("par: principal must be a par formula");
            std::vector<Occurrence> actives = {
                {d.premises[0]->conclusion.sequent.empty() ? 0 : 0, nullptr, ""}};
            // locate the two actives by matching against the premise
            Judgement expected = j;
            for (auto it = expected.sequent.begin(); it != expected.sequent.end(); ++it) {
                if (it->id == p->id) {
                    Occurrence left{next_active_id(d, 0), p->formula->left, p->owner};
                    Occurrence right{next_active_id(d, 1), p->formula->right, p->owner};
                    it = expected.sequent.erase(it);
                    it = expected.sequent.insert(it, right);
                    it = expected.sequent.insert(it, left);
                    break;
                }
            }
            if (auto r = match_premise(0, expected)) return *r;
            return CheckResult::good();
        }
        case Rule::Tensor:
        case Rule::Prec:
        case Rule::PrecUnit:
        case Rule::Cut:
            return check_two_premise(d);
        case Rule::Oplus: {
            if (auto r = need_premises(1)) return *r;
            const Occurrence* p = principal1();
            if (!p || p->formula->kind != K::Oplus) return CheckResult::fail("oplus: principal must be an oplus");
            int k = d.meta.branch;
            if (k < 1 || k > static_cast<int>(p->formula->parts.size()))
                return CheckResult::fail("oplus: branch index out of range");
            Judgement expected = j;
            for (auto& occ : expected.sequent)
                if (occ.id == p->id) occ = Occurrence{next_active_id(d, 0), p->formula->parts[k - 1], p->owner};
            if (auto r = match_premise(0, expected)) return *r;
            return CheckResult::good();
        }
        case Rule::With: {
            const Occurrence* p = principal1();
            if (!p || p->formula->kind != K::With) return CheckResult::fail("with: principal must be a with");
            if (auto r = need_premises(p->formula->parts.size())) return *r;
            for (std::size_t i = 0; i < p->formula->parts.size(); ++i) {
                Judgement expected = j;
                for (auto& occ : expected.sequent)
                    if (occ.id == p->id) occ = Occurrence{next_active_id(d, i), p->formula->parts[i], p->owner};
                if (auto r = match_premise(i, expected)) return *r;
            }
            return CheckResult::good();
        }
        case Rule::Forall:
        case Rule::NuUnit:
        case Rule::YaUnit: {
            if (auto r = need_premises(1)) return *r;
            const Occurrence* p = principal1();
            K want = d.rule == Rule::Forall ? K::Forall : d.rule == Rule::NuUnit ? K::New : K::Ya;
            if (!p || p->formula->kind != want)
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": wrong principal connective");
            auto fv = j.free_vars_except(p->id);
            if (fv.count(p->formula->x))
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": eigenvariable '" +
                                         p->formula->x + "' occurs free in the context");
            Judgement expected = j;
            for (auto& occ : expected.sequent)
                if (occ.id == p->id) occ = Occurrence{next_active_id(d, 0), p->formula->body, p->owner};
            if (auto r = match_premise(0, expected)) return *r;
            return CheckResult::good();
        }
        case Rule::Exists: {
            if (auto r = need_premises(1)) return *r;
            const Occurrence* p = principal1();
            if (!p || p->formula->kind != K::Exists) return CheckResult::fail("ex: principal must be an exists");
            if (d.meta.witness.empty()) return CheckResult::fail("ex: missing witness");
            Judgement expected = j;
            for (auto& occ : expected.sequent)
                if (occ.id == p->id)
                    occ = Occurrence{next_active_id(d, 0), fsubst(p->formula->body, d.meta.witness, p->formula->x), p->owner};
            if (auto r = match_premise(0, expected)) return *r;
            return CheckResult::good();
        }
        case Rule::NuLoad:
        case Rule::YaLoad: {
            if (auto r = need_premises(1)) return *r;
            const Occurrence* p = principal1();
            K want = d.rule == Rule::NuLoad ? K::New : K::Ya;
            if (!p || p->formula->kind != want)
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": wrong principal connective");
            auto fv = j.free_vars_except(p->id);
            if (fv.count(p->formula->x))
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": variable occurs free in the context");
            if (j.store.count(p->formula->x))
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": variable already in the store");
            Judgement expected = j;
            expected.store[p->formula->x] = d.rule == Rule::NuLoad ? Nom::Nu : Nom::Ya;
            for (auto& occ : expected.sequent)
                if (occ.id == p->id) occ = Occurrence{next_active_id(d, 0), p->formula->body, p->owner};
            if (auto r = match_premise(0, expected)) return *r;
            return CheckResult::good();
        }
        case Rule::NuPop:
        case Rule::YaPop: {
            if (auto r = need_premises(1)) return *r;
            const Occurrence* p = principal1();
            // new-pop consumes a loaded nu and instantiates a ya formula; dually for ya-pop
            K want = d.rule == Rule::NuPop ? K::Ya : K::New;
            Nom consumed = d.rule == Rule::NuPop ? Nom::Nu : Nom::Ya;
            if (!p || p->formula->kind != want)
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": wrong principal connective");
            const std::string& y = d.meta.witness;
            auto it = j.store.find(y);
            if (it == j.store.end() || it->second != consumed)
                return CheckResult::fail(std::string(rule_name(d.rule)) + ": store does not hold the popped variable '" + y + "'");
            Judgement expected = j;
            expected.store.erase(y);
            for (auto& occ : expected.sequent)
                if (occ.id == p->id)
                    occ = Occurrence{next_active_id(d, 0), fsubst(p->formula->body, y, p->formula->x), p->owner};
            if (auto r = match_premise(0, expected)) return *r;
            return CheckResult::good();
        }
    }
    return CheckResult::fail("unknown rule");
}

// --- helpers the switch above relies on (declared before use in-class style) ---

inline int next_active_id(const Derivation& d, std::size_t which) {
    // actives take the ids that appear in the premise but not the conclusion;
    // builders assign them in order, so recover by scanning
    std::set<int> concl;
    for (auto& o : d.conclusion.sequent) concl.insert(o.id);
    std::vector<int> fresh;
    if (which < d.premises.size()) {
        for (auto& o : d.premises[which]->conclusion.sequent)
            if (!concl.count(o.id)) fresh.push_back(o.id);
    } else if (!d.premises.empty()) {
        for (auto& o : d.premises[0]->conclusion.sequent)
            if (!concl.count(o.id)) fresh.push_back(o.id);
    }
    std::sort(fresh.begin(), fresh.end());
    return fresh.empty() ? -1 : fresh[0];
}

inline CheckResult check_two_premise(const Derivation& d);

}  // namespace pil

#endif
