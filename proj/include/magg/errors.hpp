#pragma once

#include <stdexcept>
#include <string>

namespace magg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonDivisibleLayout : Error {
  using Error::Error;
};
struct ZeroMessages : Error {
  using Error::Error;
};
struct EmptyBatch : Error {
  using Error::Error;
};
struct MixedTargetGroup : Error {
  using Error::Error;
};
struct MalformedFrame : Error {
  using Error::Error;
};
struct BufferOverflow : Error {
  using Error::Error;
};
struct SwitchWhileAvailable : Error {
  using Error::Error;
};
struct DuplicateHandler : Error {
  using Error::Error;
};
struct UnknownHandler : Error {
  using Error::Error;
};
struct Deadlock : Error {
  using Error::Error;
};
struct OutOfMemory : Error {
  using Error::Error;
};
struct ResponseTimeout : Error {
  using Error::Error;
};
struct InvalidRoot : Error {
  using Error::Error;
};
struct NonPositiveWeight : Error {
  using Error::Error;
};
struct ZeroElapsed : Error {
  using Error::Error;
};
struct ValidationFailed : Error {
  using Error::Error;
};

}  // namespace magg
