#pragma once

#include <stdexcept>
#include <string>

namespace hypcoord {

enum class ErrorKind {
  OutsideDomain,
  OnSingularSet,
  SingularEncounter,
  OrbitEscaped,
  IndexOutOfRange,
  ZeroMatrix,
  SingularMatrix,
  NoHyperbolicCoordinates,
  ConformalDegenerate,
  DegenerateCoeccentricity,
  DegenerateStep,
  ZeroDeterminant,
  Infeasible,
  DomainViolation,
  CertificateRequired,
  FrameFlipUnresolvable,
  StencilDegenerate,
  NoFrameAtStart,
  InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::OutsideDomain: return "OutsideDomain";
    case ErrorKind::OnSingularSet: return "OnSingularSet";
    case ErrorKind::SingularEncounter: return "SingularEncounter";
    case ErrorKind::OrbitEscaped: return "OrbitEscaped";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NoHyperbolicCoordinates: return "NoHyperbolicCoordinates";
    case ErrorKind::ConformalDegenerate: return "ConformalDegenerate";
    case ErrorKind::DegenerateCoeccentricity: return "DegenerateCoeccentricity";
    case ErrorKind::DegenerateStep: return "DegenerateStep";
    case ErrorKind::ZeroDeterminant: return "ZeroDeterminant";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::CertificateRequired: return "CertificateRequired";
    case ErrorKind::FrameFlipUnresolvable: return "FrameFlipUnresolvable";
    case ErrorKind::StencilDegenerate: return "StencilDegenerate";
    case ErrorKind::NoFrameAtStart: return "NoFrameAtStart";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, int index = -1)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        index_(index) {}

  ErrorKind kind() const { return kind_; }
  // Orbit index attached to SingularEncounter / OrbitEscaped, else -1.
  int index() const { return index_; }

 private:
  ErrorKind kind_;
  int index_;
};

}  // namespace hypcoord
