#include "factedit/error.hpp"

namespace factedit {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidAction:
      return "InvalidAction";
    case Errc::EmptyResult:
      return "EmptyResult";
    case Errc::NoCandidates:
      return "NoCandidates";
    case Errc::Timeout:
      return "Timeout";
    case Errc::ProtocolError:
      return "ProtocolError";
    case Errc::RemoteFailure:
      return "RemoteFailure";
    case Errc::SpaceTooLarge:
      return "SpaceTooLarge";
    case Errc::EmptyReference:
      return "EmptyReference";
    case Errc::ParseError:
      return "ParseError";
    case Errc::MissingField:
      return "MissingField";
    case Errc::IdMismatch:
      return "IdMismatch";
    case Errc::InvalidConfig:
      return "InvalidConfig";
    case Errc::Io:
      return "Io";
  }
  return "Unknown";
}

}  // namespace factedit
