#include "polyvector/method.hpp"

#include "polyvector/errors.hpp"

namespace polyvector {

std::string_view strategy_name(ChunkStrategy s) {
    switch (s) {
        case ChunkStrategy::Blind: return "blind";
        case ChunkStrategy::Flat: return "flat";
        case ChunkStrategy::Multilayer: return "multilayer";
    }
    return "unknown";
}

std::string MethodConfig::describe() const {
    std::string out;
    if (poly) out += "poly+";
    out += strategy_name(strategy);
    if (normalize_query) out += "+norm";
    return out;
}

const std::array<MethodConfig, 8>& MethodConfig::all() {
    static const std::array<MethodConfig, 8> table{{
        {'a', ChunkStrategy::Blind, false, false},
        {'b', ChunkStrategy::Flat, false, false},
        {'c', ChunkStrategy::Multilayer, false, false},
        {'d', ChunkStrategy::Multilayer, false, true},
        {'e', ChunkStrategy::Blind, true, false},
        {'f', ChunkStrategy::Flat, true, false},
        {'g', ChunkStrategy::Multilayer, true, false},
        {'h', ChunkStrategy::Multilayer, true, true},
    }};
    return table;
}

MethodConfig MethodConfig::from_id(char id) {
    for (const auto& method : all()) {
        if (method.id == id) return method;
    }
    throw Error::config(std::string("unknown method id '") + id + "' (expected a..h)");
}

}  // namespace polyvector
