#pragma once

#include <stdexcept>
#include <string>

namespace ocularage {

// Error taxonomy. The CLI maps these onto exit codes: config errors -> 2,
// data errors -> 3, training errors -> 4, evaluation errors -> 5.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// dataman
struct OutOfStudyRange : DataError {
    using DataError::DataError;
};
struct InsufficientSubjects : DataError {
    using DataError::DataError;
};
struct ManifestParseError : DataError {
    using DataError::DataError;
};
struct SchemaError : DataError {
    using DataError::DataError;
};
struct IoError : DataError {
    using DataError::DataError;
};

// preproc
struct SegmentationFailure : DataError {
    using DataError::DataError;
};
struct EmptyDataset : DataError {
    using DataError::DataError;
};
struct ZeroStd : DataError {
    using DataError::DataError;
};

// nnet
struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StaleCache : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptCheckpoint : DataError {
    using DataError::DataError;
};
struct VersionMismatch : DataError {
    using DataError::DataError;
};

// multitask
struct EmptyBatch : TrainError {
    using TrainError::TrainError;
};
struct EmptySplit : TrainError {
    using TrainError::TrainError;
};
struct MissingClass : TrainError {
    using TrainError::TrainError;
};
struct DivergedLoss : TrainError {
    using TrainError::TrainError;
};

// eval
struct EmptyInput : EvalError {
    using EvalError::EvalError;
};
struct SubjectLeakage : EvalError {
    using EvalError::EvalError;
};
struct NoConvLayer : EvalError {
    using EvalError::EvalError;
};

} // namespace ocularage
