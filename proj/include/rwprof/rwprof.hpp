#pragma once

#include <rwprof/baselines.hpp>
#include <rwprof/changepoint.hpp>
#include <rwprof/consistency.hpp>
#include <rwprof/contrast.hpp>
#include <rwprof/corpus.hpp>
#include <rwprof/error.hpp>
#include <rwprof/evenness.hpp>
#include <rwprof/native_format.hpp>
#include <rwprof/pipeline.hpp>
#include <rwprof/sandbox_report.hpp>
#include <rwprof/synthgen.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>
