#ifndef CWC_SYMBOL_HPP
#define CWC_SYMBOL_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace cwc {

/// Interned identifier. Equality is O(1); ordering compares the spelled
/// name so that canonical orders do not depend on interning sequence.
class Symbol {
public:
    Symbol() = default;

    static Symbol intern(std::string_view name);

    const std::string& str() const;
    uint32_t id() const { return id_; }

    bool operator==(const Symbol& o) const { return id_ == o.id_; }
    bool operator!=(const Symbol& o) const { return id_ != o.id_; }

    // Name order, not intern order.
    static int cmp(Symbol a, Symbol b);

private:
    explicit Symbol(uint32_t id) : id_(id) {}
    uint32_t id_ = 0;  // 0 is the empty symbol
};

inline bool symbol_less(Symbol a, Symbol b) { return Symbol::cmp(a, b) < 0; }

}  // namespace cwc

#endif
