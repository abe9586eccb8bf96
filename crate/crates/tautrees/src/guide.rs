//! Book chapters as doc-tests (filled in once the guide exists).
