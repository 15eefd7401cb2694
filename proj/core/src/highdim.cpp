#include "gsum/highdim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"
#include "gsum/parallel.hpp"

namespace gsum {
namespace {

constexpr std::size_t kShard = 1u << 16;

std::size_t argmax_lowest(const double* g, std::size_t d) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < d; ++j) {
    if (g[j] > g[best]) best = j;
  }
  return best;
}

// Draws a standard Gaussian on the hyperplane sum(g) = 0 of R^d.
void draw_centered(RandomSource& rng, std::vector<double>& g) {
  double mean = 0.0;
  for (double& x : g) {
    x = rng.normal();
    mean += x;
  }
  mean /= static_cast<double>(g.size());
  for (double& x : g) x -= mean;
}

struct Moments {
  std::vector<double> sum;
  std::vector<double> sumsq;
  explicit Moments(std::size_t n = 0) : sum(n, 0.0), sumsq(n, 0.0) {}
  void add(std::size_t i, double v) {
    sum[i] += v;
    sumsq[i] += v * v;
  }
};

double mean_z(double sum, double sumsq, double n) {
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  const double se = std::sqrt(var / n);
  if (se < 1e-10) return 0.0;
  return mean / se;
}

double frequency_max_z(const std::vector<std::uint64_t>& counts, double n) {
  const double p = 1.0 / static_cast<double>(counts.size());
  const double sd = std::sqrt(n * p * (1.0 - p));
  double worst = 0.0;
  for (auto c : counts) worst = std::max(worst, std::abs(static_cast<double>(c) - n * p) / sd);
  return worst;
}

}  // namespace

SimplexConstruction simplex_vectors(std::size_t d) {
  if (d < 2) throw DomainError("simplex_vectors: d must be >= 2");
  const double scale = std::sqrt(std::log(static_cast<double>(d)));
  SimplexConstruction s{d, {}, std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
  // Coordinate k of e_j - mean is the j-th entry of the k-th Helmert vector
  // (1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1)).
  for (std::size_t j = 0; j < d; ++j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d - 1));
    for (std::size_t k = 1; k < d; ++k) {
      const double norm = std::sqrt(static_cast<double>(k) * static_cast<double>(k + 1));
      double entry = 0.0;
      if (j < k) {
        entry = 1.0 / norm;
      } else if (j == k) {
        entry = -static_cast<double>(k) / norm;
      }
      v[static_cast<Eigen::Index>(k - 1)] = scale * entry;
    }
    s.vectors.push_back(std::move(v));
  }
  return s;
}

std::size_t region_index(const Eigen::VectorXd& z, const SimplexConstruction& s) {
  std::size_t best = 0;
  double best_v = z.dot(s.vectors[0]);
  for (std::size_t j = 1; j < s.d; ++j) {
    const double v = z.dot(s.vectors[j]);
    if (v > best_v) {
      best_v = v;
      best = j;
    }
  }
  return best;
}

double familywise_z(std::size_t cells, double level) {
  return std_normal_quantile(1.0 - level / (2.0 * static_cast<double>(std::max<std::size_t>(cells, 1))));
}

CdEstimate estimate_cd(const SimplexConstruction& s, std::size_t nsamples,
                       const RandomSource& rng, std::size_t threads) {
  if (nsamples < 10000) throw DomainError("estimate_cd: nsamples must be >= 10^4");
  const std::size_t d = s.d;
  const double logd = std::log(static_cast<double>(d));
  const double vnorm2 = logd * (1.0 - 1.0 / static_cast<double>(d));
  const double root = std::sqrt(logd);

  struct Shard {
    std::vector<std::uint64_t> counts;
    Moments proj;
    Moments ortho;
  };
  const std::size_t shards = (nsamples + kShard - 1) / kShard;
  std::vector<Shard> acc(shards);
  parallel_shards(shards, threads, [&](std::size_t sh) {
    RandomSource r = rng.split(sh);
    Shard out{std::vector<std::uint64_t>(d, 0), Moments(d), Moments(d)};
    std::vector<double> g(d);
    std::vector<double> frame(d);
    const std::size_t n = std::min(kShard, nsamples - sh * kShard);
    for (std::size_t i = 0; i < n; ++i) {
      draw_centered(r, g);
      const std::size_t j = argmax_lowest(g.data(), d);
      // <g, v_j> = sqrt(log d) g_j because g sums to zero.
      const double proj = root * g[j] / vnorm2;
      ++out.counts[j];
      out.proj.add(j, proj);
      // Orthogonal part g - proj v_j with v_j = sqrt(log d) (e_j - 1/d),
      // reordered so that coordinate j comes first.
      std::size_t c = 1;
      for (std::size_t q = 0; q < d; ++q) {
        const double vq = root * ((q == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(d));
        const double r_q = g[q] - proj * vq;
        if (q == j) {
          frame[0] = r_q;
        } else {
          frame[c++] = r_q;
        }
      }
      for (std::size_t q = 0; q < d; ++q) out.ortho.add(q, frame[q]);
    }
    acc[sh] = std::move(out);
  });

  std::vector<std::uint64_t> counts(d, 0);
  std::vector<KahanSum> psum(d), psq(d), osum(d), osq(d);
  for (const auto& sh : acc) {
    for (std::size_t j = 0; j < d; ++j) {
      counts[j] += sh.counts[j];
      psum[j] += sh.proj.sum[j];
      psq[j] += sh.proj.sumsq[j];
      osum[j] += sh.ortho.sum[j];
      osq[j] += sh.ortho.sumsq[j];
    }
  }
  const auto n = static_cast<double>(nsamples);
  KahanSum total;
  KahanSum total_sq;
  CdEstimate e{};
  e.region_counts = counts;
  e.region_max_z = frequency_max_z(counts, n);
  for (std::size_t j = 0; j < d; ++j) {
    total += psum[j].value();
    total_sq += psq[j].value();
    const auto nj = static_cast<double>(counts[j]);
    const double mj = nj > 0 ? psum[j].value() / nj : 0.0;
    const double vj = nj > 1 ? std::max(0.0, psq[j].value() / nj - mj * mj) : 0.0;
    e.per_region.push_back(mj);
    e.per_region_stderr.push_back(nj > 0 ? std::sqrt(vj / nj) : 0.0);
    e.orthogonal_max_z = std::max(e.orthogonal_max_z, std::abs(mean_z(osum[j].value(), osq[j].value(), n)));
  }
  e.c_d = total.value() / n;
  e.std_error = std::sqrt(std::max(0.0, total_sq.value() / n - e.c_d * e.c_d) / n);
  e.critical_z = familywise_z(d);
  return e;
}

BesselReport bessel_identity_check(const SimplexConstruction& s, std::size_t nsamples,
                                   const RandomSource& rng, std::size_t threads) {
  if (!std::isfinite(s.c_d)) throw DomainError("bessel_identity_check: c_d has not been estimated");
  if (nsamples < 10000) throw DomainError("bessel_identity_check: nsamples must be >= 10^4");
  const std::size_t d = s.d;
  const double root = std::sqrt(std::log(static_cast<double>(d)));
  struct Shard {
    std::vector<std::uint64_t> counts;
    Moments y;
    double norm2 = 0.0;
  };
  const std::size_t shards = (nsamples + kShard - 1) / kShard;
  std::vector<Shard> acc(shards);
  parallel_shards(shards, threads, [&](std::size_t sh) {
    RandomSource r = rng.split(sh);
    Shard out{std::vector<std::uint64_t>(d, 0), Moments(d), 0.0};
    std::vector<double> g(d);
    const std::size_t n = std::min(kShard, nsamples - sh * kShard);
    for (std::size_t i = 0; i < n; ++i) {
      draw_centered(r, g);
      const std::size_t j = argmax_lowest(g.data(), d);
      ++out.counts[j];
      double norm2 = 0.0;
      for (std::size_t q = 0; q < d; ++q) {
        const double vq = root * ((q == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(d));
        const double yq = g[q] - s.c_d * vq;
        out.y.add(q, yq);
        norm2 += yq * yq;
      }
      out.norm2 += norm2;
    }
    acc[sh] = std::move(out);
  });
  BesselReport rep{};
  rep.d = d;
  rep.nsamples = nsamples;
  rep.c_d = s.c_d;
  rep.vertex_counts.assign(d, 0);
  std::vector<KahanSum> ysum(d), ysq(d);
  KahanSum norm2;
  for (const auto& sh : acc) {
    for (std::size_t q = 0; q < d; ++q) {
      rep.vertex_counts[q] += sh.counts[q];
      ysum[q] += sh.y.sum[q];
      ysq[q] += sh.y.sumsq[q];
    }
    norm2 += sh.norm2;
  }
  const auto n = static_cast<double>(nsamples);
  rep.vertex_max_z = frequency_max_z(rep.vertex_counts, n);
  for (std::size_t q = 0; q < d; ++q) {
    rep.residual_mean.push_back(ysum[q].value() / n);
    rep.residual_max_z = std::max(rep.residual_max_z, std::abs(mean_z(ysum[q].value(), ysq[q].value(), n)));
  }
  rep.residual_second_moment = norm2.value() / n;
  rep.critical_z = familywise_z(d);
  return rep;
}

// ---------------------------------------------------------------------------

const char* to_string(SearchStrategy s) noexcept {
  return s == SearchStrategy::kExhaustive ? "exhaustive" : "randomized";
}

SearchStrategy parse_strategy(const std::string& name) {
  if (name == "exhaustive") return SearchStrategy::kExhaustive;
  if (name == "randomized") return SearchStrategy::kRandomized;
  throw DomainError("unknown search strategy '" + name + "'");
}

double part_norm(const std::vector<Eigen::VectorXd>& v, const std::vector<std::size_t>& part) {
  if (part.empty()) return 0.0;
  const auto n = v[part.front()].size();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (auto i : part) s.noalias() += v[i] * v[i].transpose();
  s /= static_cast<double>(part.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

namespace {

struct SizeRule {
  std::size_t lo;
  std::size_t hi;
  bool ok(std::size_t s) const noexcept { return s >= lo && s <= hi; }
};

SizeRule size_rule(std::size_t k, std::size_t min_part) {
  const auto lo = static_cast<std::size_t>(std::ceil(static_cast<double>(k) / 3.0));
  return {std::max({lo, min_part, std::size_t{1}}), 5050 * k};
}

std::vector<std::size_t> members(std::uint32_t mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

// Enumerates restricted growth strings with exactly r blocks in
// lexicographic order.
class Exhaustive {
 public:
  Exhaustive(const std::vector<Eigen::VectorXd>& v, std::size_t r, SizeRule rule)
      : m_(v.size()), r_(r), rule_(rule), cache_(std::size_t{1} << v.size(), -1.0), v_(v) {}

  std::vector<std::uint32_t> run() {
    masks_.assign(r_, 0);
    sizes_.assign(r_, 0);
    recurse(0, 0);
    return best_;
  }

 private:
  double norm(std::uint32_t mask) {
    double& c = cache_[mask];
    if (c < 0.0) c = part_norm(v_, members(mask));
    return c;
  }

  void recurse(std::size_t i, std::size_t used) {
    if (i == m_) {
      if (used != r_) return;
      double worst = 0.0;
      for (std::size_t b = 0; b < r_; ++b) {
        if (!rule_.ok(sizes_[b])) return;
        worst = std::max(worst, norm(masks_[b]));
        if (worst >= best_value_) return;
      }
      best_value_ = worst;
      best_ = masks_;
      return;
    }
    if (m_ - i < r_ - used) return;
    const std::size_t top = std::min(used + 1, r_);
    for (std::size_t b = 0; b < top; ++b) {
      masks_[b] |= (1u << i);
      ++sizes_[b];
      recurse(i + 1, b == used ? used + 1 : used);
      masks_[b] &= ~(1u << i);
      --sizes_[b];
    }
  }

  std::size_t m_;
  std::size_t r_;
  SizeRule rule_;
  std::vector<double> cache_;
  const std::vector<Eigen::VectorXd>& v_;
  std::vector<std::uint32_t> masks_;
  std::vector<std::size_t> sizes_;
  std::vector<std::uint32_t> best_;
  double best_value_ = std::numeric_limits<double>::infinity();
};

struct LocalResult {
  std::vector<std::size_t> block;  // block of each element
  double worst = std::numeric_limits<double>::infinity();
  double total = std::numeric_limits<double>::infinity();
};

LocalResult local_search(const std::vector<Eigen::VectorXd>& v, std::size_t r, SizeRule rule,
                         std::size_t sweeps, RandomSource rng) {
  const std::size_t m = v.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  LocalResult cur;
  cur.block.assign(m, 0);
  for (std::size_t t = 0; t < m; ++t) cur.block[order[t]] = t % r;

  std::vector<std::vector<std::size_t>> parts(r);
  auto rebuild = [&](std::size_t b) {
    parts[b].clear();
    for (std::size_t i = 0; i < m; ++i) {
      if (cur.block[i] == b) parts[b].push_back(i);
    }
  };
  std::vector<double> norms(r);
  for (std::size_t b = 0; b < r; ++b) {
    rebuild(b);
    norms[b] = part_norm(v, parts[b]);
  }
  auto score = [&](const std::vector<double>& ns) {
    double w = 0.0;
    double t = 0.0;
    for (double x : ns) {
      w = std::max(w, x);
      t += x;
    }
    return std::pair{w, t};
  };
  auto [worst, total] = score(norms);
  auto valid = [&]() {
    for (std::size_t b = 0; b < r; ++b) {
      if (!rule.ok(parts[b].size())) return false;
    }
    return true;
  };

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t b = 0; b < r; ++b) {
        const std::size_t a = cur.block[i];
        if (b == a) continue;
        // Try moving i to b, then swapping i with each member of b.
        std::vector<std::size_t> candidates{m};
        for (auto q : parts[b]) candidates.push_back(q);
        for (auto q : candidates) {
          cur.block[i] = b;
          if (q != m) cur.block[q] = a;
          rebuild(a);
          rebuild(b);
          std::vector<double> trial = norms;
          bool ok = valid();
          if (ok) {
            trial[a] = part_norm(v, parts[a]);
            trial[b] = part_norm(v, parts[b]);
            auto [w2, t2] = score(trial);
            if (w2 < worst || (w2 == worst && t2 < total - 1e-15)) {
              norms = trial;
              worst = w2;
              total = t2;
              improved = true;
              break;
            }
          }
          cur.block[i] = a;
          if (q != m) cur.block[q] = b;
          rebuild(a);
          rebuild(b);
        }
      }
    }
    if (!improved) break;
  }
  cur.worst = valid() ? worst : std::numeric_limits<double>::infinity();
  cur.total = total;
  return cur;
}

void finalize_certificate(const std::vector<Eigen::VectorXd>& v, PartitionResult& r) {
  r.per_part_norm.clear();
  r.sizes.clear();
  r.certified = !r.parts.empty();
  for (const auto& p : r.parts) {
    const double nrm = part_norm(v, p);
    r.per_part_norm.push_back(nrm);
    r.sizes.push_back(p.size());
    const auto sz = static_cast<double>(p.size());
    if (!(sz >= r.size_low && sz <= r.size_high && nrm <= r.norm_bound)) r.certified = false;
  }
}

}  // namespace

PartitionResult mss_partition(const std::vector<Eigen::VectorXd>& v, std::size_t k,
                              const PartitionOptions& opt) {
  const std::size_t m = v.size();
  if (k == 0) throw DomainError("mss_partition: k must be positive");
  if (m < k) throw DomainError("mss_partition: need at least k vectors");
  const auto n = v.front().size();
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  for (const auto& x : v) {
    if (x.size() != n) throw DomainError("mss_partition: vectors differ in dimension");
    if (x.norm() > 1.0 + 1e-12) throw DomainError("mss_partition: some |v_i| exceeds 1");
    second.noalias() += x * x.transpose();
  }
  second /= static_cast<double>(m);
  const double top = max_eigenvalue(second);
  if (top > 1.0 / static_cast<double>(k) + 1e-10) {
    throw DomainError("mss_partition: (1/m) sum v v^T has eigenvalue " + std::to_string(top) +
                      " above 1/k");
  }

  PartitionResult res;
  res.k = k;
  res.strategy = opt.strategy;
  res.norm_bound = 50.0 / static_cast<double>(k);
  res.size_low = static_cast<double>(k) / 3.0;
  res.size_high = 5050.0 * static_cast<double>(k);
  const std::size_t r = m / k;
  const SizeRule rule = size_rule(k, opt.min_part_size);

  std::vector<std::vector<std::size_t>> parts;
  if (opt.strategy == SearchStrategy::kExhaustive) {
    if (m > 12) throw DomainError("mss_partition: exhaustive search is limited to m <= 12");
    for (auto mask : Exhaustive(v, r, rule).run()) parts.push_back(members(mask));
  } else {
    std::vector<LocalResult> runs(std::max<std::size_t>(opt.restarts, 1));
    const RandomSource base(opt.seed, 0x5eed);
    parallel_shards(runs.size(), opt.threads, [&](std::size_t i) {
      runs[i] = local_search(v, r, rule, opt.sweeps, base.split(i));
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
      if (runs[i].worst < runs[best].worst ||
          (runs[i].worst == runs[best].worst && runs[i].total < runs[best].total)) {
        best = i;
      }
    }
    if (std::isfinite(runs[best].worst)) {
      parts.assign(r, {});
      for (std::size_t i = 0; i < m; ++i) parts[runs[best].block[i]].push_back(i);
      std::sort(parts.begin(), parts.end(),
                [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }
  }
  res.parts = std::move(parts);
  finalize_certificate(v, res);
  if (!res.certified) {
    res.failure = res.parts.empty()
                      ? "no partition satisfying the size rule was found within the search budget"
                      : "best partition found misses the certificate; search budget exhausted";
  }
  return res;
}

bool verify_partition(const std::vector<Eigen::VectorXd>& v, const PartitionResult& r) {
  std::vector<int> seen(v.size(), 0);
  for (const auto& p : r.parts) {
    for (auto i : p) {
      if (i >= v.size() || seen[i]++) return false;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
  PartitionResult again = r;
  again.norm_bound = 50.0 / static_cast<double>(r.k);
  again.size_low = static_cast<double>(r.k) / 3.0;
  again.size_high = 5050.0 * static_cast<double>(r.k);
  finalize_certificate(v, again);
  return again.per_part_norm == r.per_part_norm && again.sizes == r.sizes &&
         again.certified == r.certified && again.norm_bound == r.norm_bound &&
         again.size_low == r.size_low && again.size_high == r.size_high;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd FactorizationPlan::map(std::size_t j) const { return raw_columns.at(j) / scales.at(j); }

Eigen::VectorXd FactorizationPlan::apply(std::size_t j, const Eigen::VectorXd& x) const {
  return raw_columns.at(j) * (x / scales.at(j));
}

FactorizationPlan normcov_factorize(const DiscreteDistributionVec& x, double lambda,
                                    const FactorizationOptions& opt) {
  if (!(lambda >= 1.0)) throw DomainError("normcov_factorize: lambda must be >= 1");
  for (const auto& a : x.atoms()) {
    if (a.x.norm() > lambda * (1.0 + 1e-12)) {
      throw DomainError("normcov_factorize: atom norm " + std::to_string(a.x.norm()) +
                        " exceeds lambda");
    }
  }
  const double cov = max_eigenvalue(x.covariance());
  const double gate = lambda * lambda * std::exp(-lambda * lambda);
  if (cov > gate + 1e-10) {
    throw DomainError("normcov_factorize: covariance norm " + std::to_string(cov) +
                      " exceeds lambda^2 exp(-lambda^2) = " + std::to_string(gate));
  }
  // Uniform weights: find a common denominator.
  std::size_t den = 0;
  for (std::size_t q = 1; q <= 4096 && den == 0; ++q) {
    bool ok = true;
    for (const auto& a : x.atoms()) {
      const double c = a.p * static_cast<double>(q);
      if (std::abs(c - std::round(c)) > 1e-9) {
        ok = false;
        break;
      }
    }
    if (ok) den = q;
  }
  if (den == 0) throw DomainError("normcov_factorize: weights are not multiples of 1/q for q <= 4096");

  FactorizationPlan plan;
  plan.lambda = lambda;
  plan.c0 = opt.c0;
  plan.k = static_cast<std::size_t>(std::floor(std::exp(lambda * lambda)));
  std::vector<Eigen::VectorXd> base;
  for (const auto& a : x.atoms()) {
    const auto c = static_cast<std::size_t>(std::llround(a.p * static_cast<double>(den)));
    for (std::size_t t = 0; t < c; ++t) base.push_back(a.x);
  }
  const std::size_t cycles = (plan.k + base.size() - 1) / base.size();
  for (std::size_t c = 0; c < std::max<std::size_t>(cycles, 1); ++c) {
    plan.atoms.insert(plan.atoms.end(), base.begin(), base.end());
  }
  std::vector<Eigen::VectorXd> v;
  v.reserve(plan.atoms.size());
  for (const auto& a : plan.atoms) v.push_back(a / lambda);

  PartitionOptions popt = opt.partition;
  popt.min_part_size = std::max<std::size_t>(popt.min_part_size, 2);
  if (v.size() > 12) popt.strategy = SearchStrategy::kRandomized;
  plan.parts = mss_partition(v, plan.k, popt);
  if (!plan.parts.certified) return plan;

  bool ok = true;
  for (const auto& part : plan.parts.parts) {
    const auto n = static_cast<Eigen::Index>(x.dim());
    Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(part.size()));
    for (std::size_t c = 0; c < part.size(); ++c) raw.col(static_cast<Eigen::Index>(c)) = plan.atoms[part[c]];
    const double scale = std::sqrt(std::log(static_cast<double>(part.size())));
    const double nrm = raw.isZero(0.0) ? 0.0 : operator_norm(raw) / scale;
    const Eigen::VectorXd mean = raw.rowwise().mean();
    plan.raw_columns.push_back(raw);
    plan.scales.push_back(scale);
    plan.columns.push_back(part);
    plan.operator_norms.push_back(nrm);
    plan.part_means.push_back(mean);
    if (nrm > opt.c0 || mean.norm() > opt.c0) ok = false;
  }
  plan.certified = ok;
  return plan;
}

}  // namespace gsum
