"""Admin CLI: serve, ingest, export, version-create, user-add, team-add.

Commands operate directly on the configured database and storage root (no
HTTP round trip); `serve` starts the API.  Exit codes: 0 success, 1
configuration or operation error, 2 partial ingest.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from slidehub import errors
from slidehub.gateway.config import ConfigError, load_settings
from slidehub.hub import Hub
from slidehub.store.images import is_supported_filename


def _settings(ctx):
    params = ctx.obj
    try:
        return load_settings(
            config_file=params.get("config"),
            storage_root=params.get("storage_root"),
            db_path=params.get("db_path"),
            bind=params.get("bind"),
            public_base_url=params.get("public_url"),
        )
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)


def _hub(ctx) -> Hub:
    settings = _settings(ctx)
    return Hub(settings.db_path, settings.storage_root, base_url=settings.base_url)


def _user(hub: Hub, username: str):
    user = hub.access.user_by_name(username)
    if user is None:
        click.echo(f"error: unknown user {username!r}", err=True)
        sys.exit(1)
    return user


@click.group()
@click.option("--config", type=click.Path(), default=None, help="JSON config file.")
@click.option("--storage-root", type=click.Path(), default=None,
              help="Tile/blob storage directory (env EXACT_STORAGE_ROOT).")
@click.option("--db", "db_path", type=click.Path(), default=None,
              help="SQLite database path (env EXACT_DB_PATH).")
@click.option("--bind", default=None, help="host:port to serve on (env EXACT_BIND).")
@click.option("--public-url", default=None,
              help="Base URL peers use to reach this instance (env EXACT_PUBLIC_URL).")
@click.pass_context
def main(ctx, config, storage_root, db_path, bind, public_url):
    """Collaborative annotation server for gigapixel images."""
    ctx.obj = {
        "config": config,
        "storage_root": storage_root,
        "db_path": db_path,
        "bind": bind,
        "public_url": public_url,
    }


@main.command()
@click.pass_context
def serve(ctx):
    """Run the HTTP API."""
    import uvicorn

    from slidehub.gateway.app import create_app

    settings = _settings(ctx)
    app = create_app(settings)
    uvicorn.run(app, host=settings.host, port=settings.port, log_level="info")


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--set", "image_set", type=int, required=True, help="Target image set id.")
@click.option("--user", "username", required=True, help="Acting user (needs create rights).")
@click.pass_context
def ingest(ctx, directory, image_set, username):
    """Upload every decodable image in DIRECTORY into an image set."""
    hub = _hub(ctx)
    user = _user(hub, username)
    ingested, failed = 0, []
    for path in sorted(Path(directory).iterdir()):
        if not path.is_file():
            continue
        if not is_supported_filename(path.name):
            failed.append((path.name, "unsupported format"))
            continue
        try:
            record = hub.images.upload_image(user, image_set, path.name, path.read_bytes())
        except errors.ServiceError as exc:
            failed.append((path.name, str(exc)))
            continue
        ingested += 1
        click.echo(f"ingested {path.name} -> {record.public_name} (id {record.id})")
    click.echo(f"{ingested} ingested, {len(failed)} failed")
    for name, reason in failed:
        click.echo(f"  failed: {name}: {reason}", err=True)
    if failed:
        sys.exit(2)


@main.command()
@click.option("--set", "image_set", type=int, required=True)
@click.option("--version", "version_id", type=int, default=None,
              help="Export a version snapshot instead of live state.")
@click.option("--template", default="{public_name},{template_name},{vector}",
              help="Line template with {placeholder} fields.")
@click.option("--user", "username", required=True)
@click.option("--output", "-o", type=click.Path(), default=None, help="File instead of stdout.")
@click.pass_context
def export(ctx, image_set, version_id, template, username, output):
    """Write the annotation export for an image set."""
    hub = _hub(ctx)
    user = _user(hub, username)
    try:
        text = hub.annotations.export_annotations(user, image_set, version_id=version_id,
                                                  template=template)
    except errors.ServiceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if output:
        Path(output).write_text(text)
        click.echo(f"wrote {len(text.splitlines())} lines to {output}")
    else:
        click.echo(text, nl=False)


@main.command("version-create")
@click.option("--set", "image_set", type=int, required=True)
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--user", "username", required=True)
@click.pass_context
def version_create(ctx, image_set, name, description, username):
    """Snapshot the current annotation state of an image set."""
    hub = _hub(ctx)
    user = _user(hub, username)
    try:
        version = hub.annotations.create_version(user, image_set, name, description)
    except errors.ServiceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"version {version.id} ({version.name}): "
               f"{len(version.snapshot)} annotations, {len(version.image_list)} images")


@main.command("user-add")
@click.argument("username")
@click.option("--admin", is_flag=True, help="Grant instance-admin powers.")
@click.option("--team", "team_id", type=int, default=None, help="Also join this team.")
@click.option("--rights", default="read",
              help="Comma-joined rights for --team (create,read,update,delete,verify,manage).")
@click.pass_context
def user_add(ctx, username, admin, team_id, rights):
    """Create a user and print their API token."""
    hub = _hub(ctx)
    try:
        user, token = hub.access.create_user(username, is_admin=admin)
        if team_id is not None:
            hub.access.set_membership(user.id, team_id, set(rights.split(",")))
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"user {user.id} ({user.username}) token: {token}")


@main.command("team-add")
@click.argument("name")
@click.pass_context
def team_add(ctx, name):
    """Create a team and print its id."""
    hub = _hub(ctx)
    try:
        team_id = hub.access.create_team(name)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"team {team_id} ({name})")


if __name__ == "__main__":
    main()
