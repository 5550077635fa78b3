# Root conftest: puts the repository root on sys.path so the top-level
# packages (assaybounds, cli, commands) import without installation.
