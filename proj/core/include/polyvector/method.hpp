#pragma once

#include <array>
#include <string>
#include <string_view>

namespace polyvector {

enum class ChunkStrategy { Blind, Flat, Multilayer };

std::string_view strategy_name(ChunkStrategy s);

/// One of the eight retrieval configurations, id 'a'..'h': content chunking
/// strategy, reference-embedding augmentation, and query normalization.
struct MethodConfig {
    char id{};
    ChunkStrategy strategy{};
    bool poly{};
    bool normalize_query{};

    std::string describe() const;

    /// Throws ErrorKind::Config for ids outside 'a'..'h'.
    static MethodConfig from_id(char id);
    static const std::array<MethodConfig, 8>& all();
};

}  // namespace polyvector
