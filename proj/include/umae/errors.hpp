#pragma once

#include <stdexcept>
#include <string>

namespace umae {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or record (carries the line number where known).
class ParseError : public Error {
public:
    using Error::Error;
};

// A record or value violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Prompt registry has no token for a (dataset, task) pair.
class MissingPrompt : public Error {
public:
    using Error::Error;
};

// Answer or explanation text already contains the separator token.
class SeparatorCollision : public Error {
public:
    using Error::Error;
};

// Joint output does not contain the separator token.
class NoSeparator : public Error {
public:
    using Error::Error;
};

// A bounding box does not fit inside the image.
class OutOfBounds : public Error {
public:
    using Error::Error;
};

class EmptyCorpus : public Error {
public:
    using Error::Error;
};

// A token outside the scorer vocabulary was passed at scoring time.
class UnknownToken : public Error {
public:
    using Error::Error;
};

// An external score file does not cover an expected instance id.
class MissingId : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class MissingPrediction : public Error {
public:
    using Error::Error;
};

class EmptyGold : public Error {
public:
    using Error::Error;
};

// Generation has no in-vocabulary word to embed.
class EmptyGeneration : public Error {
public:
    using Error::Error;
};

// External scorer wire protocol violation.
class ProtocolError : public Error {
public:
    using Error::Error;
};

} // namespace umae
