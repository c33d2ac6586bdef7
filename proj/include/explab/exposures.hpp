#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "explab/network.hpp"

namespace explab {

enum class ExposureKind {
  kDim,                // T_i = d_i
  kAnyTreatedNeighbor, // T_i = (d_i, 1{some neighbor treated})
  kNeighborCount,      // T_i = (d_i, number of treated neighbors)
  kSubnetworkIso,      // T_i = iso class of (d_N, A_N) vs two references
  kFractionTreated,    // T_i = (#treated)/n, exact rational
};

// Discrete exposure value. FractionTreated values are kept as exact reduced
// rationals so conditioning events never hinge on float equality.
struct ExposureValue {
  enum class Tag { kBit, kPair, kIsoClass, kFraction };
  Tag tag = Tag::kBit;
  int a = 0;
  int b = 0;  // pair second / fraction denominator; iso: a in {1, 0, -1 = other}

  static ExposureValue bit_value(int d) { return {Tag::kBit, d, 0}; }
  static ExposureValue pair_value(int d, int c) { return {Tag::kPair, d, c}; }
  static ExposureValue iso_class(int c) { return {Tag::kIsoClass, c, 0}; }
  static ExposureValue fraction(int num, int den);

  bool operator==(const ExposureValue&) const = default;
  std::string str() const;
  // Parses the rendering back: "1", "(1,2)", "3/4", "other".
  static ExposureValue parse(const std::string& s, Tag tag);
};

// Exposure mapping specification. `own` and `gamma` parameterize the
// subpopulation and the construction of t, t' for the neighbor-based kinds
// (the treated-neighbor count is reported as tau_count to avoid clashing
// with the estimand's name).
struct ExposureSpec {
  ExposureKind kind = ExposureKind::kDim;
  int own = 1;                      // ego treatment d defining t, t'
  int gamma = 0;                    // NeighborCount subpopulation degree
  int k = 1;                        // radius for SubnetworkIso
  std::optional<Network> ref_net;   // SubnetworkIso subnetwork a
  Bits ref_hi = 0;                  // delta  (class 1)
  Bits ref_lo = 0;                  // delta' (class 0)

  // Neighborhood radius implied by the kind (SubnetworkIso: user k).
  int radius() const;
  // N(i,K); FractionTreated depends on every unit, so the full mask.
  Bits neighborhood_mask(const Network& net, int i) const;
  ExposureValue::Tag value_tag() const;
};

// T_i = f(d_N(i,K)); depends on d only through the neighborhood mask.
ExposureValue exposure_value(const ExposureSpec& f, const Network& net, int i, Bits d);

// The subpopulation M_n implied by the exposure kind. May be empty (callers
// of tau reject empty subpopulations).
Bits subpopulation(const ExposureSpec& f, const Network& net);

struct PindownResult {
  enum class Status { kHolds, kFails, kEmpty };
  Status status = Status::kHolds;
  Bits delta = 0;                       // neighborhood subvector, packed on N(i,K)
  Bits witness_a = 0, witness_b = 0;    // two distinct attaining subvectors
};

// Does the event T_i = t' determine the K-neighborhood subvector uniquely?
PindownResult check_pindown(const ExposureSpec& f, const Network& net, int i,
                            const ExposureValue& t_prime);

const char* kind_name(ExposureKind k);

}  // namespace explab
