def main():  # noqa: C901
    """Import every pangrc module and load every shipped preset; exit 1 on the first kind of failure seen."""

    import os
    import pathlib
    import sys
    import traceback

    from importlib import import_module

    root = pathlib.Path(__file__).parent.parent.parent.parent

    def module_name(path: str) -> str:
        relative = pathlib.Path(path).resolve().relative_to(root.resolve())
        if relative.name == "__init__.py":
            relative = relative.parent
        return str(relative.with_suffix("")).replace(os.path.sep, ".")

    def report(path: str, exc: Exception, messages: set) -> None:
        _type, _exc, exc_tb = sys.exc_info()
        line = next(
            (frame.lineno or 0 for frame in reversed(traceback.extract_tb(exc_tb)) if frame.filename.endswith(path)), 0
        )
        message = f"{type(exc).__name__} {exc}"
        if message not in messages:
            print(f"{path}:{line}: traceback: {message}")
            messages.add(message)

    messages = set()
    files = sys.argv[1:] or sorted(str(file) for file in root.joinpath("pangrc").rglob("*.py"))
    for path in files:
        try:
            import_module(module_name(path))
        except Exception as exc:
            report(path, exc, messages)

    if not sys.argv[1:]:
        try:
            from pangrc.config import load_config
            from pangrc.config import PRESETS
        except Exception as exc:
            report("pangrc/config.py", exc, messages)
        else:
            for name, filename in sorted(PRESETS.items()):
                try:
                    load_config(name)
                except Exception as exc:
                    report(f"pangrc/static/{filename}", exc, messages)

    if messages:
        sys.exit(1)


if __name__ == "__main__":
    main()
