#include "streamint/keys.hpp"

#include "streamint/errors.hpp"

namespace streamint {

int key_arity(AssociationStrategy s) {
  switch (s) {
    case AssociationStrategy::Head: return 1;
    case AssociationStrategy::HeadTimestamp:
    case AssociationStrategy::HeadClient: return 2;
    case AssociationStrategy::HeadTimestampClient: return 3;
  }
  return 0;
}

std::string_view to_string(AssociationStrategy s) {
  switch (s) {
    case AssociationStrategy::Head: return "head";
    case AssociationStrategy::HeadTimestamp: return "head_ts";
    case AssociationStrategy::HeadClient: return "head_ip";
    case AssociationStrategy::HeadTimestampClient: return "head_ts_ip";
  }
  return "?";
}

AssociationStrategy parse_strategy(std::string_view name) {
  if (name == "head") return AssociationStrategy::Head;
  if (name == "head_ts") return AssociationStrategy::HeadTimestamp;
  if (name == "head_ip") return AssociationStrategy::HeadClient;
  if (name == "head_ts_ip") return AssociationStrategy::HeadTimestampClient;
  throw ConfigError("unknown association strategy '" + std::string(name) + "'");
}

CompositeKey extract_key(const StreamTuple& t, AssociationStrategy s) {
  CompositeKey k{t.head_id};
  if (s == AssociationStrategy::HeadTimestamp || s == AssociationStrategy::HeadTimestampClient) {
    k.text += '|';
    k.text += std::to_string(t.instance_ts_s);
  }
  if (s == AssociationStrategy::HeadClient || s == AssociationStrategy::HeadTimestampClient) {
    k.text += '|';
    k.text += t.user_id;
  }
  return k;
}

}  // namespace streamint
