#ifndef PIL_NAMES_HPP
#define PIL_NAMES_HPP

#include <cstdint>
#include <set>
#include <string>

namespace pil {

// Deterministic fresh-name source. Emits base_k names, skipping anything
// currently reserved. Single-owner mutable state: do not share one supply
// across concurrent tasks.
class NameSupply {
public:
    NameSupply() = default;
    explicit NameSupply(std::uint64_t start) : counter_(start) {}

    void reserve(const std::string& name) { reserved_.insert(name); }

    template <typename Container>
    void reserve_all(const Container& names) {
        for (const auto& n : names) reserved_.insert(n);
    }

    bool is_reserved(const std::string& name) const { return reserved_.count(name) > 0; }

    // Next unused name derived from `base`.
    std::string fresh(const std::string& base) {
        for (;;) {
            std::string candidate = base + "_" + std::to_string(++counter_);
            if (!reserved_.count(candidate)) {
                reserved_.insert(candidate);
                return candidate;
            }
        }
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t counter_ = 0;
    std::set<std::string> reserved_;
};

inline bool is_identifier_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool is_identifier_char(char c) {
    return is_identifier_start(c) || (c >= '0' && c <= '9') || c == '\'';
}

inline bool is_identifier(const std::string& s) {
    if (s.empty() || !is_identifier_start(s[0])) return false;
    for (char c : s)
        if (!is_identifier_char(c)) return false;
    return true;
}

}  // namespace pil

#endif
