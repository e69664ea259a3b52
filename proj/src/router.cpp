#include "magg/router.hpp"

namespace magg {

Policy parse_policy(const std::string& name) {
  if (name == "aml") return Policy::aml;
  if (name == "mst") return Policy::mst_two_sided;
  if (name == "mst-one-sided") return Policy::mst_one_sided;
  if (name == "new-mst") return Policy::new_mst;
  throw Error("unknown policy: " + name);
}

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::aml:
      return "aml";
    case Policy::mst_one_sided:
      return "mst-one-sided";
    case Policy::mst_two_sided:
      return "mst";
    case Policy::new_mst:
      return "new-mst";
  }
  return "?";
}

std::vector<Leg> route_aml(RankId src, RankId dst, const DomainMap& dm) {
  if (src == dst) return {};
  if (dm.same_group(src, dst)) return {{src, dst, Domain::intra}};
  RankId fwd = dm.rank_of(dm.group_of(dst), dm.local_of(src));
  if (fwd == dst) return {{src, dst, Domain::inter}};
  return {{src, fwd, Domain::inter}, {fwd, dst, Domain::intra}};
}

std::vector<Leg> route_mst(RankId src, RankId dst, const DomainMap& dm) {
  if (src == dst) return {};
  if (dm.same_group(src, dst)) return {{src, dst, Domain::intra}};
  RankId fwd = dm.rank_of(dm.group_of(src), dm.local_of(dst));
  if (fwd == src) return {{src, dst, Domain::inter}};
  return {{src, fwd, Domain::intra}, {fwd, dst, Domain::inter}};
}

void HandlerRegistry::add(std::uint16_t id, Handler fn) {
  if (has(id)) throw DuplicateHandler("handler id already registered");
  handlers_.emplace(id, std::move(fn));
}

void HandlerRegistry::add_request(std::uint16_t id, RequestHandler fn) {
  if (has(id)) throw DuplicateHandler("handler id already registered");
  request_handlers_.emplace(id, std::move(fn));
}

void HandlerRegistry::invoke(std::uint16_t id, RankId src, const std::uint8_t* data,
                             std::size_t len) const {
  auto it = handlers_.find(id);
  if (it == handlers_.end()) throw UnknownHandler("no handler registered for id");
  it->second(src, data, len);
}

std::vector<std::uint8_t> HandlerRegistry::invoke_request(std::uint16_t id, RankId src,
                                                          const std::uint8_t* data,
                                                          std::size_t len) const {
  auto it = request_handlers_.find(id);
  if (it == request_handlers_.end()) throw UnknownHandler("no request handler registered for id");
  return it->second(src, data, len);
}

}  // namespace magg
