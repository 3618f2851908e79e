#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceff/rc_network.hpp"

namespace ceff {

/// Parses one net document, validates it and returns its canonical form.
RcNetwork parse_network(std::string_view text);
RcNetwork network_from_json(const nlohmann::json& doc);

nlohmann::json network_to_json(const RcNetwork& net);
/// Single-line JSON, suitable for a JSONL corpus.
std::string serialize_network(const RcNetwork& net);

/// Streams a JSONL corpus; blank lines are skipped. Errors name the line number.
void for_each_network(std::istream& in, const std::function<void(RcNetwork&&)>& sink);
std::vector<RcNetwork> read_network_corpus(const std::string& path);

std::string_view to_string(NodeKind kind) noexcept;

}  // namespace ceff
