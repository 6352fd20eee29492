# Generated migration for ExperimentRun model

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.CharField(db_index=True, max_length=100, unique=True)),
                ('kind', models.CharField(choices=[('simulate', 'Simulate'), ('vnv', 'Validation experiment'), ('compare', 'Algorithm comparison')], default='vnv', max_length=20)),
                ('status', models.CharField(choices=[('PENDING', 'Pending'), ('RUNNING', 'Running'), ('COMPLETED', 'Completed'), ('FAILED', 'Failed')], default='PENDING', max_length=20)),
                ('fingerprint', models.CharField(db_index=True, max_length=16)),
                ('config', models.JSONField(default=dict)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('runs_total', models.IntegerField(default=0)),
                ('runs_ok', models.IntegerField(default=0)),
                ('runs_skipped', models.IntegerField(default=0)),
                ('report', models.JSONField(blank=True, null=True)),
                ('errors', models.JSONField(blank=True, default=list)),
                ('started_at', models.DateTimeField(blank=True, null=True)),
                ('completed_at', models.DateTimeField(blank=True, null=True)),
                ('duration_seconds', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['-created_at', 'status'], name='vnv_experim_created_6a1f0e_idx')],
            },
        ),
    ]
