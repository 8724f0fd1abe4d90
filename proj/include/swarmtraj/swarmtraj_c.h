#ifndef SWARMTRAJ_C_H
#define SWARMTRAJ_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ST_API __declspec(dllexport)
#else
#define ST_API __attribute__((visibility("default")))
#endif

/* Numerically identical to the library's internal error codes. */
typedef enum st_status
{
    ST_OK = 0,
    ST_INVALID_ARGUMENT,
    ST_IO,
    ST_INVALID_CONFIG,
    ST_SEED_OCCUPIED,
    ST_NO_FREE_SPACE,
    ST_EMPTY_INTERIOR,
    ST_UNBOUNDED,
    ST_NO_PATH,
    ST_COVERAGE_GAP,
    ST_EMPTY_INTERSECTION,
    ST_SINGULAR_SYSTEM,
    ST_SINGULAR_ATTITUDE,
    ST_NOT_IN_POLYTOPE,
    ST_LINE_SEARCH_FAILURE,
    ST_SCHEDULE_TIMEOUT,
    ST_POST_CHECK_FAILURE,
    ST_AUDIT_FAILURE,
    ST_INTERNAL = 100
} st_status;

typedef struct st_config st_config;
typedef struct st_polymap st_polymap;
typedef struct st_fleet st_fleet;
typedef struct st_trajectory st_trajectory;

/* Message of the last failing call on this thread; empty after a success. */
ST_API const char *st_last_error(void);
ST_API const char *st_status_name(int status);

/* configuration */
ST_API int st_config_default(st_config **out);
ST_API int st_config_load(const char *path, st_config **out);
ST_API int st_config_save(const st_config *cfg, const char *path);
ST_API void st_config_free(st_config *cfg);
ST_API uint64_t st_config_seed(const st_config *cfg);
ST_API int st_config_set_seed(st_config *cfg, uint64_t seed);
/* M_d = 0: plain distance separation between vehicles */
ST_API int st_config_set_distance_only(st_config *cfg);
ST_API int st_config_set_robustness(st_config *cfg, const double *grid, size_t n, int trials);
ST_API double st_config_radius(const st_config *cfg);
ST_API double st_config_temporal(const st_config *cfg);

/* polyhedronized maps */
ST_API int st_polyhedronize(const st_config *cfg, const char *map_path, st_polymap **out);
ST_API int st_polymap_load(const char *path, st_polymap **out);
ST_API int st_polymap_save(const st_polymap *map, const char *path);
ST_API size_t st_polymap_size(const st_polymap *map);
/* negative when the file carries no estimate */
ST_API double st_polymap_fill(const st_polymap *map, double *std_error);
ST_API void st_polymap_free(st_polymap *map);

/* fleets */
typedef struct st_mission_info
{
    int id;
    int status; /* 0 pending, 1 committed, 2 failed */
    int error;  /* st_status of the failure */
    int scheduled;
} st_mission_info;

typedef struct st_audit
{
    double worst_margin;
    int first;  /* id of the later trajectory of the worst pair, -1 without pairs */
    int second; /* id of the earlier one */
    size_t pairs;
} st_audit;

/* Plans the missions CSV in order; per-mission failures are recorded, not returned. */
ST_API int st_fleet_plan(const st_config *cfg, const st_polymap *map, const char *missions_path, st_fleet **out);
ST_API int st_fleet_load(const char *dir, st_fleet **out);
/* fleet.json, traj_<id>.json per committed trajectory and metrics.csv */
ST_API int st_fleet_save(const st_fleet *fleet, const char *dir);
ST_API size_t st_fleet_size(const st_fleet *fleet);
ST_API size_t st_fleet_mission_count(const st_fleet *fleet);
ST_API int st_fleet_mission(const st_fleet *fleet, size_t index, st_mission_info *out);
ST_API const char *st_fleet_mission_message(const st_fleet *fleet, size_t index);
ST_API int st_fleet_audit(const st_fleet *fleet, st_audit *out);
ST_API int st_fleet_trajectory(const st_fleet *fleet, size_t index, st_trajectory **out);
/* margins the fleet was planned with */
ST_API double st_fleet_radius(const st_fleet *fleet);
/* Robustness rows for the config's grid and trials, written as CSV. */
ST_API int st_fleet_robustness(const st_fleet *fleet, const st_config *cfg, const char *csv_path);
ST_API void st_fleet_free(st_fleet *fleet);

/* trajectories */
ST_API int st_trajectory_load(const char *path, st_trajectory **out);
ST_API int st_trajectory_save(const st_trajectory *traj, const char *path);
ST_API int st_trajectory_id(const st_trajectory *traj);
ST_API double st_trajectory_start(const st_trajectory *traj);
ST_API double st_trajectory_duration(const st_trajectory *traj);
ST_API int st_trajectory_shift(st_trajectory *traj, double dt);
ST_API void st_trajectory_free(st_trajectory *traj);

typedef struct st_check_report
{
    double containment; /* worst depth in the polytope union, +inf without a map */
    int containment_index;
    double criterion; /* worst pairwise margin, +inf without pairs */
    int first;        /* ids of the worst pair, later then earlier */
    int second;
    double limits; /* largest normalized limit residual */
    int limits_index;
    int pass;
} st_check_report;

/* Dense post-hoc audit of the trajectories in the given order; map may be NULL. */
ST_API int st_check(const st_config *cfg, const st_polymap *map, const st_trajectory *const *trajs, size_t n,
                    st_check_report *out);
/* Flatness profile at the config's rate, written as CSV. */
ST_API int st_profile(const st_config *cfg, const st_trajectory *traj, const char *csv_path);

#ifdef __cplusplus
}
#endif

#endif
