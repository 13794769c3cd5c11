"""Command-line front end: input documents, orchestration, reports."""
