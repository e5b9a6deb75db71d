#ifndef FPCAV_ERRORS_HPP
#define FPCAV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fpcav {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define FPCAV_DEFINE_ERROR(Name)   \
  class Name : public Error {      \
  public:                          \
    using Error::Error;            \
  }

FPCAV_DEFINE_ERROR(RangeError);
FPCAV_DEFINE_ERROR(DegenerateCavity);
FPCAV_DEFINE_ERROR(NotSingleEnded);
FPCAV_DEFINE_ERROR(WindowOverflow);
FPCAV_DEFINE_ERROR(NoClosedForm);
FPCAV_DEFINE_ERROR(GridTooCoarse);
FPCAV_DEFINE_ERROR(WindowTooShort);
FPCAV_DEFINE_ERROR(GridMismatch);
FPCAV_DEFINE_ERROR(ZeroIncidentEnergy);
FPCAV_DEFINE_ERROR(BudgetExhausted);
FPCAV_DEFINE_ERROR(ParseError);
FPCAV_DEFINE_ERROR(SchemaError);

#undef FPCAV_DEFINE_ERROR

}  // namespace fpcav

#endif  // FPCAV_ERRORS_HPP
