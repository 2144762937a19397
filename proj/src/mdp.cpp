#include "salab/mdp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "salab/errors.hpp"

namespace salab {

void Mdp::validate() const {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("Mdp: need at least one state and action");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("Mdp: gamma must lie in [0,1)");
  }
  if (reward_noise_std < 0.0) {
    throw std::invalid_argument("Mdp: reward_noise_std must be >= 0");
  }
  const size_t nsa = size_t(n_sa());
  if (P.size() != nsa * n_states || r_bar.size() != nsa ||
      kappa_b.size() != nsa) {
    throw std::invalid_argument("Mdp: field sizes inconsistent with shape");
  }
  for (int sa = 0; sa < n_sa(); ++sa) {
    double sum = 0.0;
    for (int s = 0; s < n_states; ++s) {
      const double p = P[size_t(sa) * n_states + s];
      if (p < 0.0) throw std::invalid_argument("Mdp: negative transition prob");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("Mdp: transition row " + std::to_string(sa) +
                                  " sums to " + std::to_string(sum));
    }
  }
  double ksum = 0.0;
  for (double k : kappa_b) {
    if (k < 0.0) throw std::invalid_argument("Mdp: negative kappa_b entry");
    ksum += k;
  }
  if (std::abs(ksum - 1.0) > 1e-9) {
    throw std::invalid_argument("Mdp: kappa_b must sum to 1");
  }
}

Vec state_max(const Mdp& mdp, std::span<const double> q) {
  Vec f(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    double m = q[size_t(mdp.sa_index(s, 0))];
    for (int a = 1; a < mdp.n_actions; ++a) {
      m = std::max(m, q[size_t(mdp.sa_index(s, a))]);
    }
    f[s] = m;
  }
  return f;
}

Vec bellman_apply(std::span<const double> q, const Mdp& mdp,
                  std::span<const double> d_diag) {
  const int nsa = mdp.n_sa();
  if (int(q.size()) != nsa || int(d_diag.size()) != nsa) {
    throw std::invalid_argument("bellman_apply: dimension mismatch");
  }
  for (double d : d_diag) {
    if (!(d > 0.0 && d <= 1.0)) {
      throw std::invalid_argument("bellman_apply: D entries must be in (0,1]");
    }
  }
  const Vec f = state_max(mdp, q);
  Vec out(nsa);
  for (int sa = 0; sa < nsa; ++sa) {
    double pf = 0.0;
    const auto row = mdp.row(sa);
    for (int s = 0; s < mdp.n_states; ++s) pf += row[s] * f[s];
    out[sa] = mdp.gamma * d_diag[sa] * pf + (1.0 - d_diag[sa]) * q[sa] +
              d_diag[sa] * mdp.r_bar[sa];
  }
  return out;
}

Vec solve_q_star(const Mdp& mdp, double tol, int64_t max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_q_star: tol must be > 0");
  mdp.validate();
  const int nsa = mdp.n_sa();
  const Vec ones(nsa, 1.0);
  Vec q(nsa, 0.0);
  Vec hq = bellman_apply(q, mdp, ones);
  double residual = dist_of(Norm::LInf, hq, q);
  // At this residual the post-sweep iterate H(q) is within tol of q*:
  // ||H(q) - q*|| <= gamma/(1-gamma) ||H(q) - q||.
  const double thresh = tol * (1.0 - mdp.gamma) / mdp.gamma;
  if (residual <= thresh) return hq;
  if (max_iters <= 0) {
    // Contraction-rate bound on the sweeps needed, plus slack.
    max_iters =
        int64_t(std::ceil(std::log(thresh / residual) / std::log(mdp.gamma))) +
        64;
  }
  for (int64_t it = 0; it < max_iters; ++it) {
    q = hq;
    hq = bellman_apply(q, mdp, ones);
    residual = dist_of(Norm::LInf, hq, q);
    if (residual <= thresh) return hq;
  }
  throw NoConvergenceError(residual,
                           "solve_q_star: residual " + std::to_string(residual) +
                               " above threshold after " +
                               std::to_string(max_iters) + " sweeps");
}

ClassificationResult classify(const Mdp& mdp, std::span<const double> q_star,
                              double tie_tol) {
  if (!(tie_tol > 0.0)) {
    throw std::invalid_argument("classify: tie_tol must be positive");
  }
  if (int(q_star.size()) != mdp.n_sa()) {
    throw std::invalid_argument("classify: q* dimension mismatch");
  }
  ClassificationResult res;
  res.states.tied.assign(mdp.n_states, 0);
  res.states.rooted.assign(mdp.n_states, 0);
  res.states.optimal_actions.resize(mdp.n_states);

  for (int s = 0; s < mdp.n_states; ++s) {
    double best = q_star[size_t(mdp.sa_index(s, 0))];
    for (int a = 1; a < mdp.n_actions; ++a) {
      best = std::max(best, q_star[size_t(mdp.sa_index(s, a))]);
    }
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (q_star[size_t(mdp.sa_index(s, a))] >= best - tie_tol) {
        res.states.optimal_actions[s].push_back(a);
      }
    }
    res.states.tied[s] = res.states.optimal_actions[s].size() > 1 ? 1 : 0;
  }
  for (int sp = 0; sp < mdp.n_states; ++sp) {
    double reach = 0.0;
    for (int sa = 0; sa < mdp.n_sa(); ++sa) {
      reach = std::max(reach, mdp.P[size_t(sa) * mdp.n_states + sp]);
    }
    res.states.rooted[sp] = reach <= 1e-12 ? 1 : 0;
  }
  res.type = MdpType::TypeB;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (res.states.tied[s] && !res.states.rooted[s]) {
      res.type = MdpType::TypeA;
      res.witness = s;
      break;
    }
  }
  return res;
}

Mdp random_mdp(RngStream& stream, int n_states, int n_actions, double gamma,
               double reward_noise_std) {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("random_mdp: need n_states, n_actions >= 1");
  }
  Mdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.reward_noise_std = reward_noise_std;
  const int nsa = m.n_sa();
  m.P.resize(size_t(nsa) * n_states);
  m.r_bar.resize(nsa);
  m.kappa_b.assign(nsa, 1.0 / nsa);
  const Vec ones(n_states, 1.0);
  for (int sa = 0; sa < nsa; ++sa) {
    const Vec row = stream.sample_dirichlet(ones);
    for (int s = 0; s < n_states; ++s) m.P[size_t(sa) * n_states + s] = row[s];
  }
  for (int sa = 0; sa < nsa; ++sa) m.r_bar[sa] = stream.uniform01();
  m.validate();
  return m;
}

Mdp make_type_a(const Mdp& mdp) {
  if (mdp.n_actions < 2) {
    throw std::invalid_argument("make_type_a: need at least two actions");
  }
  Mdp out = mdp;
  const int src = out.sa_index(0, 0);
  const int dst = out.sa_index(0, 1);
  for (int s = 0; s < out.n_states; ++s) {
    out.P[size_t(dst) * out.n_states + s] = out.P[size_t(src) * out.n_states + s];
  }
  out.r_bar[dst] = out.r_bar[src];
  return out;
}

double gamma0(const Mdp& mdp, std::span<const double> d_diag) {
  if (int(d_diag.size()) != mdp.n_sa()) {
    throw std::invalid_argument("gamma0: dimension mismatch");
  }
  double dmin = 1.0;
  for (double d : d_diag) {
    if (!(d > 0.0 && d <= 1.0)) {
      throw std::invalid_argument("gamma0: D entries must be in (0,1]");
    }
    dmin = std::min(dmin, d);
  }
  return 1.0 - (1.0 - mdp.gamma) * dmin;
}

std::string mdp_to_string(const Mdp& mdp) {
  std::ostringstream os;
  os << mdp.n_states << ' ' << mdp.n_actions << ' ' << format_full(mdp.gamma) << ' '
     << format_full(mdp.reward_noise_std) << '\n';
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    for (int s = 0; s < mdp.n_states; ++s) {
      if (s) os << ' ';
      os << format_full(mdp.P[size_t(sa) * mdp.n_states + s]);
    }
    os << '\n';
  }
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    if (sa) os << ' ';
    os << format_full(mdp.r_bar[sa]);
  }
  os << '\n';
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    if (sa) os << ' ';
    os << format_full(mdp.kappa_b[sa]);
  }
  os << '\n';
  return os.str();
}

Mdp mdp_from_string(const std::string& text) {
  std::istringstream is(text);
  Mdp m;
  if (!(is >> m.n_states >> m.n_actions >> m.gamma >> m.reward_noise_std)) {
    throw ParseError("mdp: bad header, expected "
                     "'n_states n_actions gamma reward_noise_std'");
  }
  if (m.n_states < 1 || m.n_actions < 1) {
    throw ParseError("mdp: header has non-positive shape");
  }
  const int nsa = m.n_sa();
  m.P.resize(size_t(nsa) * m.n_states);
  m.r_bar.resize(nsa);
  m.kappa_b.resize(nsa);
  for (size_t i = 0; i < m.P.size(); ++i) {
    if (!(is >> m.P[i])) {
      throw ParseError("mdp: truncated transition matrix at entry " +
                       std::to_string(i));
    }
  }
  for (int i = 0; i < nsa; ++i) {
    if (!(is >> m.r_bar[i])) {
      throw ParseError("mdp: truncated reward vector at entry " +
                       std::to_string(i));
    }
  }
  for (int i = 0; i < nsa; ++i) {
    if (!(is >> m.kappa_b[i])) {
      throw ParseError("mdp: truncated kappa_b vector at entry " +
                       std::to_string(i));
    }
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("mdp: ") + e.what());
  }
  return m;
}

void save_mdp(const Mdp& mdp, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_mdp: cannot open " + path);
  f << mdp_to_string(mdp);
  if (!f) throw IoError("save_mdp: write failed on " + path);
}

Mdp load_mdp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_mdp: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return mdp_from_string(buf.str());
}

}  // namespace salab
