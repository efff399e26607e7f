#pragma once

#include "anchor/core.hpp"

namespace anchor::transforms {

/// Wraps a 1/gamma-Lipschitz map T (gamma >= 1) as the resolvent of the
/// induced maximal (gamma-1)/2-strongly monotone operator. The induced
/// operator is never materialized; only its resolvent
///   J(y) = (gamma * T(y) + y) / (1 + gamma)
/// is exposed. Fixed points of T are exactly the zeros of the induced
/// operator.
ResolventOracle resolvent_from_contraction(const FixedPointMap& T, double gamma);

/// The inverse direction: from the resolvent of a maximal mu-strongly
/// monotone operator (mu >= 0) to the 1/(1+2mu)-Lipschitz map
///   T = (1 + 1/(1+2mu)) J - (1/(1+2mu)) I.
/// With mu = 0 this is the reflected resolvent 2J - I.
FixedPointMap contraction_from_resolvent(const ResolventOracle& A, double mu);

/// G = (gamma/(1+gamma)) (I - T), which is 1/(1+gamma)-averaged whenever T is
/// 1/gamma-Lipschitz. Zeros of G are the fixed points of T. Returned with
/// gamma = 1 (averaged maps are nonexpansive).
FixedPointMap averaged_from_contraction(const FixedPointMap& T, double gamma);

}  // namespace anchor::transforms
