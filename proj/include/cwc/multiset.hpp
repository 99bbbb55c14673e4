#ifndef CWC_MULTISET_HPP
#define CWC_MULTISET_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "cwc/symbol.hpp"

namespace cwc {

/// Multiset of atom names. Entries are kept sorted by name with strictly
/// positive counts, so equality is plain vector equality.
class AtomMultiset {
public:
    struct Entry {
        Symbol atom;
        uint32_t count;
        bool operator==(const Entry& o) const = default;
    };

    AtomMultiset() = default;

    void add(Symbol atom, uint32_t n = 1) {
        if (n == 0) return;
        auto it = find(atom);
        if (it != entries_.end() && it->atom == atom) {
            it->count += n;
        } else {
            entries_.insert(it, Entry{atom, n});
        }
    }

    /// Removes n occurrences; the caller must know they are present.
    void remove(Symbol atom, uint32_t n = 1) {
        auto it = find(atom);
        it->count -= n;
        if (it->count == 0) entries_.erase(it);
    }

    uint32_t count(Symbol atom) const {
        auto it = find(atom);
        return (it != entries_.end() && it->atom == atom) ? it->count : 0;
    }

    bool contains_all(const AtomMultiset& other) const {
        for (const Entry& e : other.entries_)
            if (count(e.atom) < e.count) return false;
        return true;
    }

    /// this := this - other (other must be contained).
    void subtract(const AtomMultiset& other) {
        for (const Entry& e : other.entries_) remove(e.atom, e.count);
    }

    void merge(const AtomMultiset& other) {
        for (const Entry& e : other.entries_) add(e.atom, e.count);
    }

    uint64_t total() const {
        uint64_t t = 0;
        for (const Entry& e : entries_) t += e.count;
        return t;
    }

    bool empty() const { return entries_.empty(); }
    size_t species() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    bool operator==(const AtomMultiset& o) const = default;

    static int cmp(const AtomMultiset& a, const AtomMultiset& b) {
        size_t n = std::min(a.entries_.size(), b.entries_.size());
        for (size_t i = 0; i < n; ++i) {
            int c = Symbol::cmp(a.entries_[i].atom, b.entries_[i].atom);
            if (c != 0) return c;
            if (a.entries_[i].count != b.entries_[i].count)
                return a.entries_[i].count < b.entries_[i].count ? -1 : 1;
        }
        if (a.entries_.size() != b.entries_.size())
            return a.entries_.size() < b.entries_.size() ? -1 : 1;
        return 0;
    }

private:
    std::vector<Entry>::iterator find(Symbol atom) {
        return std::lower_bound(entries_.begin(), entries_.end(), atom,
                                [](const Entry& e, Symbol s) { return symbol_less(e.atom, s); });
    }
    std::vector<Entry>::const_iterator find(Symbol atom) const {
        return std::lower_bound(entries_.begin(), entries_.end(), atom,
                                [](const Entry& e, Symbol s) { return symbol_less(e.atom, s); });
    }

    std::vector<Entry> entries_;
};

}  // namespace cwc

#endif
