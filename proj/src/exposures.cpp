#include "explab/exposures.hpp"

#include <numeric>

#include "explab/errors.hpp"

namespace explab {

ExposureValue ExposureValue::fraction(int num, int den) {
  int g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {Tag::kFraction, num, den};
}

std::string ExposureValue::str() const {
  switch (tag) {
    case Tag::kBit:
      return std::to_string(a);
    case Tag::kPair:
      return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
    case Tag::kIsoClass:
      return a == -1 ? "other" : std::to_string(a);
    case Tag::kFraction:
      return std::to_string(a) + "/" + std::to_string(b);
  }
  return "?";
}

ExposureValue ExposureValue::parse(const std::string& s, Tag tag) {
  try {
    switch (tag) {
      case Tag::kBit:
        return bit_value(std::stoi(s));
      case Tag::kPair: {
        auto comma = s.find(',');
        if (s.empty() || s.front() != '(' || s.back() != ')' || comma == std::string::npos)
          break;
        return pair_value(std::stoi(s.substr(1, comma - 1)),
                          std::stoi(s.substr(comma + 1, s.size() - comma - 2)));
      }
      case Tag::kIsoClass:
        if (s == "other") return iso_class(-1);
        return iso_class(std::stoi(s));
      case Tag::kFraction: {
        auto slash = s.find('/');
        if (slash == std::string::npos) break;
        return fraction(std::stoi(s.substr(0, slash)), std::stoi(s.substr(slash + 1)));
      }
    }
  } catch (const std::exception&) {
  }
  throw ValidationError("cannot parse exposure value '" + s + "'");
}

int ExposureSpec::radius() const {
  switch (kind) {
    case ExposureKind::kDim:
      return 0;
    case ExposureKind::kAnyTreatedNeighbor:
    case ExposureKind::kNeighborCount:
      return 1;
    case ExposureKind::kSubnetworkIso:
      return k;
    case ExposureKind::kFractionTreated:
      return -1;  // whole population; see neighborhood_mask
  }
  return 0;
}

Bits ExposureSpec::neighborhood_mask(const Network& net, int i) const {
  if (kind == ExposureKind::kFractionTreated) return full_mask(net.n());
  return net.neighborhood(i, radius());
}

ExposureValue::Tag ExposureSpec::value_tag() const {
  switch (kind) {
    case ExposureKind::kDim:
      return ExposureValue::Tag::kBit;
    case ExposureKind::kAnyTreatedNeighbor:
    case ExposureKind::kNeighborCount:
      return ExposureValue::Tag::kPair;
    case ExposureKind::kSubnetworkIso:
      return ExposureValue::Tag::kIsoClass;
    case ExposureKind::kFractionTreated:
      return ExposureValue::Tag::kFraction;
  }
  return ExposureValue::Tag::kBit;
}

namespace {

// Induced subnetwork on a mask, relabeled to 0..m-1 in ascending unit order.
Network induced(const Network& net, Bits mask) {
  auto units = mask_units(mask);
  int m = static_cast<int>(units.size());
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      if (net.linked(units[a], units[b])) edges.emplace_back(a + 1, b + 1);
  return Network(m, edges);
}

}  // namespace

ExposureValue exposure_value(const ExposureSpec& f, const Network& net, int i, Bits d) {
  switch (f.kind) {
    case ExposureKind::kDim:
      return ExposureValue::bit_value(has_bit(d, i) ? 1 : 0);
    case ExposureKind::kAnyTreatedNeighbor:
      return ExposureValue::pair_value(has_bit(d, i) ? 1 : 0,
                                       (net.neighbors(i) & d) ? 1 : 0);
    case ExposureKind::kNeighborCount:
      return ExposureValue::pair_value(has_bit(d, i) ? 1 : 0,
                                       popcount(net.neighbors(i) & d));
    case ExposureKind::kSubnetworkIso: {
      Bits mask = net.neighborhood(i, f.k);
      if (popcount(mask) != f.ref_net->n()) return ExposureValue::iso_class(-1);
      Network sub = induced(net, mask);
      Bits treat = extract(d, mask);
      if (labeled_isomorphic(sub, treat, *f.ref_net, f.ref_hi))
        return ExposureValue::iso_class(1);
      if (labeled_isomorphic(sub, treat, *f.ref_net, f.ref_lo))
        return ExposureValue::iso_class(0);
      return ExposureValue::iso_class(-1);
    }
    case ExposureKind::kFractionTreated:
      return ExposureValue::fraction(popcount(d & full_mask(net.n())), net.n());
  }
  throw ValidationError("unknown exposure kind");
}

Bits subpopulation(const ExposureSpec& f, const Network& net) {
  Bits out = 0;
  for (int i = 0; i < net.n(); ++i) {
    switch (f.kind) {
      case ExposureKind::kDim:
      case ExposureKind::kFractionTreated:
        out |= bit(i);
        break;
      case ExposureKind::kAnyTreatedNeighbor:
        if (net.degree(i) >= 1) out |= bit(i);
        break;
      case ExposureKind::kNeighborCount:
        if (net.degree(i) == f.gamma) out |= bit(i);
        break;
      case ExposureKind::kSubnetworkIso: {
        Bits mask = net.neighborhood(i, f.k);
        if (popcount(mask) != f.ref_net->n()) break;
        if (labeled_isomorphic(induced(net, mask), 0, *f.ref_net, 0)) out |= bit(i);
        break;
      }
    }
  }
  return out;
}

PindownResult check_pindown(const ExposureSpec& f, const Network& net, int i,
                            const ExposureValue& t_prime) {
  Bits mask = f.neighborhood_mask(net, i);
  int m = popcount(mask);
  if (m > Network::kMaxUnits)
    throw CapExceeded("check_pindown: neighborhood too large");
  PindownResult r;
  bool found = false;
  for (Bits sub = 0; sub < (Bits{1} << m); ++sub) {
    Bits d = deposit(sub, mask);  // outside bits irrelevant: f is N-local
    if (!(exposure_value(f, net, i, d) == t_prime)) continue;
    if (!found) {
      found = true;
      r.delta = sub;
    } else {
      r.status = PindownResult::Status::kFails;
      r.witness_a = r.delta;
      r.witness_b = sub;
      return r;
    }
  }
  if (!found) {
    r.status = PindownResult::Status::kEmpty;
    return r;
  }
  r.status = PindownResult::Status::kHolds;
  return r;
}

const char* kind_name(ExposureKind k) {
  switch (k) {
    case ExposureKind::kDim:
      return "dim";
    case ExposureKind::kAnyTreatedNeighbor:
      return "any_treated_neighbor";
    case ExposureKind::kNeighborCount:
      return "neighbor_count";
    case ExposureKind::kSubnetworkIso:
      return "subnetwork_iso";
    case ExposureKind::kFractionTreated:
      return "fraction_treated";
  }
  return "?";
}

}  // namespace explab
