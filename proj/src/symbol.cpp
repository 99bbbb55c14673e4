#include "cwc/symbol.hpp"

#include <deque>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace cwc {

namespace {

struct InternTable {
    std::shared_mutex mutex;
    std::deque<std::string> names{""};  // id 0: empty symbol
    std::unordered_map<std::string_view, uint32_t> index{{std::string_view{}, 0u}};
};

InternTable& table() {
    static InternTable t;
    return t;
}

}  // namespace

Symbol Symbol::intern(std::string_view name) {
    InternTable& t = table();
    {
        std::shared_lock lock(t.mutex);
        auto it = t.index.find(name);
        if (it != t.index.end()) return Symbol(it->second);
    }
    std::unique_lock lock(t.mutex);
    auto it = t.index.find(name);
    if (it != t.index.end()) return Symbol(it->second);
    uint32_t id = static_cast<uint32_t>(t.names.size());
    t.names.emplace_back(name);
    t.index.emplace(t.names.back(), id);
    return Symbol(id);
}

const std::string& Symbol::str() const {
    InternTable& t = table();
    std::shared_lock lock(t.mutex);
    return t.names[id_];
}

int Symbol::cmp(Symbol a, Symbol b) {
    if (a.id_ == b.id_) return 0;
    return a.str().compare(b.str()) < 0 ? -1 : 1;
}

}  // namespace cwc
