#include "hcmpc/transcription.hpp"

#include <string>

namespace hcmpc {

void HorizonPair::validate() const {
  if (N < 2 || Ntilde < 2 || Ntilde > N)
    throw InvalidArgument("invalid horizons N=" + std::to_string(N) + ", Ntilde=" + std::to_string(Ntilde) +
                          " (need 2 <= Ntilde <= N)");
}

void HorizonPair::validate_explicit() const {
  validate();
  if (N < 3 || Ntilde > N - 1)
    throw InvalidArgument("explicit bounds need N >= 3 and Ntilde <= N-1 (got N=" + std::to_string(N) +
                          ", Ntilde=" + std::to_string(Ntilde) + ")");
}

std::vector<int> OcpSpec::x1_states() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < stage_sets.size(); ++j)
    if (stage_sets[j] == ConstraintSet::X1) out.push_back(static_cast<int>(j) + 1);
  return out;
}

std::vector<int> OcpSpec::x2_states() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < stage_sets.size(); ++j)
    if (stage_sets[j] == ConstraintSet::X2) out.push_back(static_cast<int>(j) + 1);
  return out;
}

int OcpSpec::inequality_block_count() const {
  int count = 0;
  for (auto s : stage_sets) count += static_cast<int>(model->predicates(s).size());
  return count;
}

OcpSpec build_hcmpc(std::shared_ptr<const ModelSpec> model, const HorizonPair& horizons, const Vector& x_k) {
  if (!model) throw InvalidArgument("build_hcmpc: null model");
  horizons.validate();
  if (x_k.size() != model->state_dim) throw InvalidArgument("build_hcmpc: initial state has wrong dimension");
  OcpSpec ocp;
  ocp.model = std::move(model);
  ocp.kind = ProblemKind::HC;
  ocp.N = horizons.N;
  ocp.Ntilde = horizons.Ntilde;
  ocp.x_k = x_k;
  const int last_x1 = horizons.N - horizons.Ntilde + 1;
  ocp.stage_sets.resize(horizons.N);
  for (int j = 1; j <= horizons.N; ++j)
    ocp.stage_sets[j - 1] = j <= last_x1 ? ConstraintSet::X1 : ConstraintSet::X2;
  ocp.infeasible_start = !in_set(*ocp.model, x_k, ConstraintSet::X1, 1e-12);
  return ocp;
}

OcpSpec build_ucmpc(std::shared_ptr<const ModelSpec> model, int N, const Vector& x_k) {
  if (!model) throw InvalidArgument("build_ucmpc: null model");
  if (N < 1) throw InvalidArgument("build_ucmpc: N must be at least 1");
  if (x_k.size() != model->state_dim) throw InvalidArgument("build_ucmpc: initial state has wrong dimension");
  OcpSpec ocp;
  ocp.model = std::move(model);
  ocp.kind = ProblemKind::UC;
  ocp.N = N;
  ocp.Ntilde = 0;
  ocp.x_k = x_k;
  ocp.stage_sets.assign(N, ConstraintSet::X2);
  return ocp;
}

OcpSpec relax_to_x2(const OcpSpec& ocp) {
  OcpSpec out = ocp;
  for (auto& s : out.stage_sets) s = ConstraintSet::X2;
  out.kind = ProblemKind::UC;
  out.Ntilde = 0;
  out.infeasible_start = false;
  return out;
}

}  // namespace hcmpc
