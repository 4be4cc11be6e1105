#pragma once

#include <array>
#include <string>
#include <string_view>

namespace hyperts {

/// The three 4D real algebras with basis (1, i, j, k).
enum class AlgebraKind { Quaternion, Coquaternion, Clifford11 };

std::string_view to_string(AlgebraKind kind);

/// Accepts "quaternion", "coquaternion", "cl11" (also "clifford11").
/// Throws std::invalid_argument otherwise.
AlgebraKind algebra_from_string(std::string_view name);

/// One hypercomplex element v[0] + i*v[1] + j*v[2] + k*v[3].
struct HNum {
  std::array<double, 4> v{};

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  bool operator==(const HNum&) const = default;
};

/// Structure constants: c[a][b][d] is the coefficient of e_d in e_a * e_b.
struct AlgebraTable {
  std::array<std::array<std::array<double, 4>, 4>, 4> c{};

  double operator()(std::size_t a, std::size_t b, std::size_t d) const {
    return c[a][b][d];
  }
};

using Mat4 = std::array<std::array<double, 4>, 4>;

const AlgebraTable& table_for(AlgebraKind kind);

HNum hmul(const HNum& a, const HNum& b, const AlgebraTable& table);
HNum hadd(const HNum& a, const HNum& b);

/// M with M * vec(x) == vec(w * x), i.e. M[d][b] = sum_a w_a c[a][b][d].
Mat4 left_mul_matrix(const HNum& w, const AlgebraTable& table);

}  // namespace hyperts
