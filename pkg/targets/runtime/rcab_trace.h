#ifndef RCAB_TRACE_H
#define RCAB_TRACE_H

/* Embedded tracing runtime for corpus targets.
 *
 * Targets call rcab_trace_init() first thing in main(), mark program
 * points with TRACE_BLOCK / TRACE_VAL, and leave through TRACE_EXIT so
 * the trace gets its terminal line.  Output goes to the file named by
 * the RCAB_TRACE environment variable, in the line protocol the bench
 * harness parses (header RCAB1, B/V event lines, one X or S terminal).
 * Without RCAB_TRACE the runtime is disabled and the target runs
 * normally.
 *
 * A signal handler for SIGSEGV/SIGABRT/SIGBUS/SIGFPE flushes the
 * buffered events and appends the `S <signal>` terminal before
 * re-raising, so crashing runs still produce parseable traces.
 */

void rcab_trace_init(void);
void rcab_trace_block(long id);
void rcab_trace_val(long site, long long value);
void rcab_trace_exit(int code) __attribute__((noreturn));

#define TRACE_BLOCK(id) rcab_trace_block(id)
#define TRACE_VAL(site, value) rcab_trace_val((site), (long long)(value))
#define TRACE_EXIT(code) rcab_trace_exit(code)

#endif /* RCAB_TRACE_H */
