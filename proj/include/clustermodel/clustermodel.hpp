#pragma once

#include "clustermodel/error.hpp"
#include "clustermodel/data.hpp"
#include "clustermodel/clustering.hpp"
#include "clustermodel/pca.hpp"
#include "clustermodel/classifiers.hpp"
#include "clustermodel/evaluation.hpp"
#include "clustermodel/stats.hpp"
#include "clustermodel/pipeline.hpp"
#include "clustermodel/report.hpp"
