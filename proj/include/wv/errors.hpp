#pragma once

#include <stdexcept>
#include <string>

namespace wv {

// Base of every domain error. `code()` is the stable machine-readable
// name used in CLI diagnostics ("DegenerateSpectrum: ...").
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define WV_DEFINE_ERROR(NAME)                                      \
  class NAME : public Error {                                      \
   public:                                                         \
    explicit NAME(const std::string& what) : Error(#NAME, what) {} \
  }

WV_DEFINE_ERROR(OverlapVanishes);
WV_DEFINE_ERROR(NotHermitian);
WV_DEFINE_ERROR(DegenerateSpectrum);
WV_DEFINE_ERROR(InvalidSpin);
WV_DEFINE_ERROR(GridResolution);
WV_DEFINE_ERROR(ShiftTooLarge);
WV_DEFINE_ERROR(PostSelectionImpossible);
WV_DEFINE_ERROR(WeaknessViolated);
WV_DEFINE_ERROR(UnitarityDrift);
WV_DEFINE_ERROR(ProtectionTooWeak);
WV_DEFINE_ERROR(NormalizationUnderflow);
WV_DEFINE_ERROR(EmptyInput);
WV_DEFINE_ERROR(ParseError);
WV_DEFINE_ERROR(ValidationError);

#undef WV_DEFINE_ERROR

}  // namespace wv
