#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "optwlsvi/mdp_model.hpp"

// Container layout (whitespace separated, one section per line):
//
//   optwlsvi-mdp 1
//   states S actions A dim d horizon H episodes K
//   initial <S hexfloats>
//   features <S*A*d hexfloats, row-major>
//   step t h theta <d hexfloats> measure <d*S hexfloats, row-major>   (K*H lines)
//   end

namespace optwlsvi {

namespace {

constexpr const char* kMagic = "optwlsvi-mdp";
constexpr int kVersion = 1;

void put(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  if (ec != std::errc{}) throw std::runtime_error("write_mdp: formatting failed");
  out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
}

template <typename Derived>
void put_all(std::ostream& out, const Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
  }
}

std::string token(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("read_mdp: unexpected end of input");
  return tok;
}

void expect(std::istream& in, const std::string& word) {
  const std::string tok = token(in);
  if (tok != word) {
    throw std::runtime_error("read_mdp: expected '" + word + "', got '" + tok + "'");
  }
}

int get_int(std::istream& in) {
  const std::string tok = token(in);
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw std::runtime_error("read_mdp: bad integer '" + tok + "'");
  }
  return v;
}

double get_double(std::istream& in) {
  const std::string tok = token(in);
  const char* first = tok.data();
  const char* last = first + tok.size();
  bool negative = false;
  if (first != last && *first == '-') {
    negative = true;
    ++first;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::hex);
  if (ec != std::errc{} || ptr != last) {
    throw std::runtime_error("read_mdp: bad number '" + tok + "'");
  }
  return negative ? -v : v;
}

template <typename Derived>
void get_all(std::istream& in, Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get_double(in);
  }
}

}  // namespace

void write_mdp(std::ostream& out, const NonStationaryLinearMDP& mdp) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "states " << mdp.num_states() << " actions " << mdp.num_actions() << " dim "
      << mdp.dim() << " horizon " << mdp.horizon() << " episodes " << mdp.num_episodes()
      << '\n';
  out << "initial";
  put_all(out, mdp.initial_state_dist());
  out << "\nfeatures";
  put_all(out, mdp.features().table);
  out << '\n';
  for (int t = 0; t < mdp.num_episodes(); ++t) {
    for (int h = 0; h < mdp.horizon(); ++h) {
      const StepParams& p = mdp.params(t, h);
      out << "step " << t << ' ' << h << " theta";
      put_all(out, p.theta);
      out << " measure";
      put_all(out, p.measure);
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write_mdp: stream failure");
}

NonStationaryLinearMDP read_mdp(std::istream& in) {
  expect(in, kMagic);
  if (get_int(in) != kVersion) throw std::runtime_error("read_mdp: unsupported version");
  expect(in, "states");
  const int S = get_int(in);
  expect(in, "actions");
  const int A = get_int(in);
  expect(in, "dim");
  const int d = get_int(in);
  expect(in, "horizon");
  const int H = get_int(in);
  expect(in, "episodes");
  const int K = get_int(in);
  if (S < 1 || A < 1 || d < 1 || H < 1 || K < 1) {
    throw std::runtime_error("read_mdp: sizes must be positive");
  }

  expect(in, "initial");
  Eigen::VectorXd initial(S);
  get_all(in, initial);
  expect(in, "features");
  Eigen::MatrixXd table(static_cast<Eigen::Index>(S) * A, d);
  get_all(in, table);

  std::vector<StepParams> schedule;
  schedule.reserve(static_cast<std::size_t>(K) * H);
  for (int t = 0; t < K; ++t) {
    for (int h = 0; h < H; ++h) {
      expect(in, "step");
      if (get_int(in) != t || get_int(in) != h) {
        throw std::runtime_error("read_mdp: steps out of order");
      }
      StepParams p{Eigen::VectorXd(d), Eigen::MatrixXd(d, S)};
      expect(in, "theta");
      get_all(in, p.theta);
      expect(in, "measure");
      get_all(in, p.measure);
      schedule.push_back(std::move(p));
    }
  }
  expect(in, "end");
  return NonStationaryLinearMDP(FeatureMap(S, A, std::move(table)), H, K,
                                std::move(schedule), std::move(initial));
}

}  // namespace optwlsvi
