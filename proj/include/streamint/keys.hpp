#pragma once

#include <string>
#include <string_view>

#include "streamint/trace.hpp"

namespace streamint {

/// Which tuple attributes identify the instance a tuple belongs to.
enum class AssociationStrategy { Head, HeadTimestamp, HeadClient, HeadTimestampClient };

/// Number of attributes in the composite key: 1, 2, 2, 3.
int key_arity(AssociationStrategy s);

/// "head", "head_ts", "head_ip", "head_ts_ip"
std::string_view to_string(AssociationStrategy s);
AssociationStrategy parse_strategy(std::string_view name);

/// Composite key rendered as its attributes joined by '|', e.g. "A|1298625089|10.0.0.28".
struct CompositeKey {
  std::string text;
  friend bool operator==(const CompositeKey&, const CompositeKey&) = default;
};

CompositeKey extract_key(const StreamTuple& t, AssociationStrategy s);

}  // namespace streamint

template <>
struct std::hash<streamint::CompositeKey> {
  std::size_t operator()(const streamint::CompositeKey& k) const noexcept { return std::hash<std::string>{}(k.text); }
};
