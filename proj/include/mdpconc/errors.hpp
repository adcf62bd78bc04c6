#pragma once

#include <stdexcept>
#include <string>

namespace mdpconc {

// Base class for all library errors. `code()` is a stable machine-readable
// identifier used by the CLI when serializing error lists.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what)
      : Error("DimensionMismatch", what) {}
};

struct NonStochasticRow : Error {
  int state;
  int action;
  double deficit;  // row_sum - 1
  NonStochasticRow(int s, int a, double d)
      : Error("NonStochasticRow",
              "transition row (state=" + std::to_string(s) +
                  ", action=" + std::to_string(a) + ") sums to 1" +
                  (d >= 0 ? "+" : "") + std::to_string(d)),
        state(s), action(a), deficit(d) {}
};

struct RewardOutOfRange : Error {
  int state;
  int action;
  RewardOutOfRange(int s, int a, double value, double r_max)
      : Error("RewardOutOfRange",
              "reward(" + std::to_string(s) + "," + std::to_string(a) + ")=" +
                  std::to_string(value) + " outside [0," +
                  std::to_string(r_max) + "]"),
        state(s), action(a) {}
};

struct InvalidPolicy : Error {
  explicit InvalidPolicy(const std::string& what) : Error("InvalidPolicy", what) {}
};

struct EnumerationTooLarge : Error {
  unsigned long long count;
  unsigned long long cap;
  EnumerationTooLarge(unsigned long long count_, unsigned long long cap_)
      : Error("EnumerationTooLarge",
              "policy count " + std::to_string(count_) + " exceeds cap " +
                  std::to_string(cap_)),
        count(count_), cap(cap_) {}
};

struct SingularSystem : Error {
  explicit SingularSystem(const std::string& what) : Error("SingularSystem", what) {}
};

struct NotInPiAR : Error {
  explicit NotInPiAR(const std::string& what) : Error("NotInPiAR", what) {}
};

struct NoConvergence : Error {
  long long iterations;
  double residual;
  NoConvergence(const std::string& where, long long iters, double res)
      : Error("NoConvergence", where + " did not converge after " +
                                   std::to_string(iters) +
                                   " iterations (residual=" +
                                   std::to_string(res) + ")"),
        iterations(iters), residual(res) {}
};

struct NotSolvableHint : Error {
  explicit NotSolvableHint(const std::string& what)
      : Error("NotSolvableHint", what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error("DomainError", what) {}
};

struct KZero : Error {
  explicit KZero(const std::string& what) : Error("KZero", what) {}
};

struct InfiniteDiameter : Error {
  explicit InfiniteDiameter(const std::string& what)
      : Error("InfiniteDiameter", what) {}
};

struct HorizonExceeded : Error {
  explicit HorizonExceeded(const std::string& what)
      : Error("HorizonExceeded", what) {}
};

struct EmptyVector : Error {
  explicit EmptyVector(const std::string& what) : Error("EmptyVector", what) {}
};

struct InconsistentValueFunction : Error {
  double residual;
  InconsistentValueFunction(const std::string& what, double res)
      : Error("InconsistentValueFunction", what), residual(res) {}
};

struct SigmaDegenerate : Error {
  explicit SigmaDegenerate(const std::string& what)
      : Error("SigmaDegenerate", what) {}
};

struct FileNotFound : Error {
  explicit FileNotFound(const std::string& path)
      : Error("FileNotFound", "cannot open file: " + path) {}
};

}  // namespace mdpconc
