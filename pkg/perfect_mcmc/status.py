"""
Process exit codes of the `perfect-mcmc` command line.

Every error raised by the toolkit carries one of these codes, so a batch
driver can tell a bad chain spec from a sampler that ran out of horizon.
"""
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_HORIZON = 3
EXIT_ENUMERATION_CAP = 4

EXIT_NAMES = {
    EXIT_OK: "ok",
    EXIT_FAILURE: "internal error",
    EXIT_VALIDATION: "validation error",
    EXIT_HORIZON: "horizon or attempts exceeded",
    EXIT_ENUMERATION_CAP: "enumeration cap exceeded",
}
