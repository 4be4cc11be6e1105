#include "hyperts/algebra.hpp"

#include <stdexcept>

namespace hyperts {

namespace {

// Signed basis products for the imaginary units. Entry [a][b] = s * e_idx
// encodes e_{a+1} * e_{b+1}; rows are the left factor.
struct SignedBasis {
  int sign;
  int idx;
};
using ImagBlock = std::array<std::array<SignedBasis, 3>, 3>;

constexpr int kOne = 0, kI = 1, kJ = 2, kK = 3;

constexpr ImagBlock kQuaternion = {{
    {{{-1, kOne}, {+1, kK}, {-1, kJ}}},
    {{{-1, kK}, {-1, kOne}, {+1, kI}}},
    {{{+1, kJ}, {-1, kI}, {-1, kOne}}},
}};

constexpr ImagBlock kCoquaternion = {{
    {{{-1, kOne}, {+1, kK}, {-1, kJ}}},
    {{{-1, kK}, {+1, kOne}, {-1, kI}}},
    {{{+1, kJ}, {+1, kI}, {+1, kOne}}},
}};

constexpr ImagBlock kClifford11 = {{
    {{{+1, kOne}, {+1, kK}, {+1, kJ}}},
    {{{-1, kK}, {-1, kOne}, {+1, kI}}},
    {{{-1, kJ}, {-1, kI}, {+1, kOne}}},
}};

AlgebraTable make_table(const ImagBlock& block) {
  AlgebraTable t;
  for (int d = 0; d < 4; ++d) {
    t.c[0][d][d] = 1.0;
    t.c[d][0][d] = 1.0;
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const auto& e = block[a][b];
      t.c[a + 1][b + 1][e.idx] = static_cast<double>(e.sign);
    }
  }
  return t;
}

}  // namespace

std::string_view to_string(AlgebraKind kind) {
  switch (kind) {
    case AlgebraKind::Quaternion:
      return "quaternion";
    case AlgebraKind::Coquaternion:
      return "coquaternion";
    case AlgebraKind::Clifford11:
      return "cl11";
  }
  return "unknown";
}

AlgebraKind algebra_from_string(std::string_view name) {
  if (name == "quaternion") return AlgebraKind::Quaternion;
  if (name == "coquaternion") return AlgebraKind::Coquaternion;
  if (name == "cl11" || name == "clifford11") return AlgebraKind::Clifford11;
  throw std::invalid_argument("unknown algebra '" + std::string(name) + "'");
}

const AlgebraTable& table_for(AlgebraKind kind) {
  static const AlgebraTable quaternion = make_table(kQuaternion);
  static const AlgebraTable coquaternion = make_table(kCoquaternion);
  static const AlgebraTable clifford = make_table(kClifford11);
  switch (kind) {
    case AlgebraKind::Quaternion:
      return quaternion;
    case AlgebraKind::Coquaternion:
      return coquaternion;
    case AlgebraKind::Clifford11:
      return clifford;
  }
  throw std::invalid_argument("unknown algebra kind");
}

HNum hmul(const HNum& a, const HNum& b, const AlgebraTable& table) {
  HNum out;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double ab = a[i] * b[j];
      for (std::size_t d = 0; d < 4; ++d) out[d] += ab * table.c[i][j][d];
    }
  }
  return out;
}

HNum hadd(const HNum& a, const HNum& b) {
  HNum out;
  for (std::size_t d = 0; d < 4; ++d) out[d] = a[d] + b[d];
  return out;
}

Mat4 left_mul_matrix(const HNum& w, const AlgebraTable& table) {
  Mat4 m{};
  for (std::size_t a = 0; a < 4; ++a) {
    if (w[a] == 0.0) continue;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t d = 0; d < 4; ++d) m[d][b] += w[a] * table.c[a][b][d];
  }
  return m;
}

}  // namespace hyperts
