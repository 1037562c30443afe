#pragma once

#include <stdexcept>
#include <string>

namespace ridesim {

/// Base of every error the engine reports. Each subclass is one error class
/// from the public contract; the CLI maps them to distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define RIDESIM_ERROR(Name)                   \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

// wire protocol
RIDESIM_ERROR(MalformedFrame);
RIDESIM_ERROR(SchemaViolation);
RIDESIM_ERROR(UnknownKind);

// fusion / calibration
RIDESIM_ERROR(DegenerateInput);
RIDESIM_ERROR(InsufficientSamples);
RIDESIM_ERROR(InvalidBounds);

// control / session
RIDESIM_ERROR(NoVehicleSelected);
RIDESIM_ERROR(CommandRejected);
RIDESIM_ERROR(UnknownRoute);

// configuration, transport, logging
RIDESIM_ERROR(ConfigError);
RIDESIM_ERROR(BindFailure);
RIDESIM_ERROR(IoFailure);
RIDESIM_ERROR(OrderingViolation);
RIDESIM_ERROR(CorruptLog);
RIDESIM_ERROR(VersionMismatch);
RIDESIM_ERROR(TraceParseError);

#undef RIDESIM_ERROR

} // namespace ridesim
